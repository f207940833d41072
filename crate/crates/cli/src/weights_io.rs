//! Motion-model weight container: a flat binary file with a version
//! tag, the hidden size and named row-major f64 tensors, plus a
//! human-readable manifest listing tensor names and shapes.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use anyhow::{bail, Context};
use panoptrack_core::motion::LstmWeights;

const MAGIC: &[u8; 4] = b"PTWB";
const VERSION: u32 = 1;

fn write_u32(out: &mut impl Write, v: u32) -> std::io::Result<()> {
    out.write_all(&v.to_le_bytes())
}

fn read_u32(input: &mut impl Read) -> anyhow::Result<u32> {
    let mut buf = [0u8; 4];
    input.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

/// Writes `weights` to `path` and the manifest to `<path>.manifest`.
pub fn save_weights(path: &Path, weights: &LstmWeights) -> anyhow::Result<()> {
    let specs = LstmWeights::tensor_specs(weights.hidden);
    let tensors = weights.tensors();
    debug_assert_eq!(specs.len(), tensors.len());

    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(MAGIC)?;
    write_u32(&mut out, VERSION)?;
    write_u32(&mut out, weights.hidden as u32)?;
    write_u32(&mut out, tensors.len() as u32)?;
    for ((name, data), (spec_name, rows, cols)) in tensors.iter().zip(specs.iter()) {
        debug_assert_eq!(name, spec_name);
        debug_assert_eq!(data.len(), rows * cols);
        write_u32(&mut out, name.len() as u32)?;
        out.write_all(name.as_bytes())?;
        write_u32(&mut out, *rows as u32)?;
        write_u32(&mut out, *cols as u32)?;
        for v in data.iter() {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    out.flush()?;

    let manifest_path = manifest_path(path);
    let mut manifest = BufWriter::new(File::create(&manifest_path)?);
    writeln!(manifest, "format PTWB v{VERSION}")?;
    writeln!(manifest, "hidden {}", weights.hidden)?;
    for (name, rows, cols) in &specs {
        writeln!(manifest, "{name} {rows}x{cols}")?;
    }
    manifest.flush()?;
    Ok(())
}

pub fn manifest_path(weights_path: &Path) -> std::path::PathBuf {
    let mut os = weights_path.as_os_str().to_owned();
    os.push(".manifest");
    os.into()
}

pub fn load_weights(path: &Path) -> anyhow::Result<LstmWeights> {
    let mut input = BufReader::new(
        File::open(path).with_context(|| format!("cannot open weights {}", path.display()))?,
    );
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        bail!("{}: not a weight container (bad magic)", path.display());
    }
    let version = read_u32(&mut input)?;
    if version != VERSION {
        bail!("{}: unsupported version {version}", path.display());
    }
    let hidden = read_u32(&mut input)? as usize;
    let count = read_u32(&mut input)? as usize;
    let specs = LstmWeights::tensor_specs(hidden);
    if count != specs.len() {
        bail!(
            "{}: expected {} tensors, found {count}",
            path.display(),
            specs.len()
        );
    }

    let mut weights = LstmWeights::zeros(hidden);
    {
        let mut tensors = weights.tensors_mut();
        for (slot, (spec_name, rows, cols)) in tensors.iter_mut().zip(specs.iter()) {
            let name_len = read_u32(&mut input)? as usize;
            let mut name_buf = vec![0u8; name_len];
            input.read_exact(&mut name_buf)?;
            let name = String::from_utf8(name_buf)?;
            if name != *spec_name {
                bail!(
                    "{}: tensor {name:?} where {spec_name:?} expected",
                    path.display()
                );
            }
            let r = read_u32(&mut input)? as usize;
            let c = read_u32(&mut input)? as usize;
            if (r, c) != (*rows, *cols) {
                bail!(
                    "{}: tensor {name} has shape {r}x{c}, expected {rows}x{cols}",
                    path.display()
                );
            }
            let mut buf = [0u8; 8];
            for v in slot.1.iter_mut() {
                input.read_exact(&mut buf)?;
                *v = f64::from_le_bytes(buf);
            }
        }
    }
    let mut rest = [0u8; 1];
    if input.read(&mut rest)? != 0 {
        bail!("{}: trailing bytes after last tensor", path.display());
    }
    Ok(weights)
}
