//! Text formats for grid fields and trap manifests.
//!
//! Field file:
//!
//! ```text
//! origin x y z
//! spacing dx dy dz
//! dims nx ny nz
//! v0 v1 v2 ...        (nx*ny*nz values, x fastest, volts)
//! ```
//!
//! Manifest: `key = value` lines with `V_rf`, `Omega_rf`, `charge`, `mass`,
//! `rf = <field file>` and one `electrode <name> = <field file>` per control
//! electrode, in order. Relative paths resolve against the manifest directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::grid::{ScalarField, SpatialGrid, Vec3};
use super::model::{Electrode, RfDrive, TrapModel};
use crate::constants::Species;
use crate::error::{Error, Result};

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

pub fn load_field(path: impl AsRef<Path>) -> Result<ScalarField> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_field(&text, path)
}

pub fn parse_field(text: &str, path: &Path) -> Result<ScalarField> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let mut header = |key: &str| -> Result<[f64; 3]> {
        let (no, line) = lines
            .next()
            .ok_or_else(|| parse_err(path, 0, format!("missing `{key}` header")))?;
        let mut it = line.split_whitespace();
        if it.next() != Some(key) {
            return Err(parse_err(path, no, format!("expected `{key}` header")));
        }
        let vals: Vec<f64> = it
            .map(|t| t.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| parse_err(path, no, e.to_string()))?;
        <[f64; 3]>::try_from(vals)
            .map_err(|_| parse_err(path, no, format!("`{key}` needs three numbers")))
    };
    let origin = header("origin")?;
    let spacing = header("spacing")?;
    let dims_f = header("dims")?;
    let mut dims = [0usize; 3];
    for (d, &f) in dims.iter_mut().zip(&dims_f) {
        if f.fract() != 0.0 || f < 0.0 {
            return Err(parse_err(path, 3, "dims must be non-negative integers"));
        }
        *d = f as usize;
    }
    let grid = SpatialGrid::new(Vec3::from(origin), Vec3::from(spacing), dims)?;

    let mut values = Vec::with_capacity(grid.len());
    for (no, line) in lines {
        for tok in line.split_whitespace() {
            let v = tok
                .parse::<f64>()
                .map_err(|e| parse_err(path, no, format!("{tok:?}: {e}")))?;
            values.push(v);
        }
    }
    ScalarField::new(grid, values)
}

/// Serialize with shortest round-trip formatting, so `load(save(f)) == f` bit for bit.
pub fn format_field(field: &ScalarField) -> String {
    let g = &field.grid;
    let mut s = String::with_capacity(field.values.len() * 24 + 128);
    let _ = writeln!(s, "origin {:e} {:e} {:e}", g.origin.x, g.origin.y, g.origin.z);
    let _ = writeln!(s, "spacing {:e} {:e} {:e}", g.spacing.x, g.spacing.y, g.spacing.z);
    let _ = writeln!(s, "dims {} {} {}", g.dims[0], g.dims[1], g.dims[2]);
    for row in field.values.chunks(g.dims[0]) {
        let mut first = true;
        for v in row {
            if !first {
                s.push(' ');
            }
            first = false;
            let _ = write!(s, "{v:e}");
        }
        s.push('\n');
    }
    s
}

pub fn save_field(field: &ScalarField, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_field(field)).map_err(|e| Error::io(path, e))
}

/// Write every basis field next to a manifest in `dir` and return the manifest path.
pub fn save_model(model: &TrapModel, dir: impl AsRef<Path>) -> Result<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let drive = model.drive();
    let sp = model.species();
    let mut m = String::new();
    let _ = writeln!(m, "V_rf = {:e}", drive.amplitude);
    let _ = writeln!(m, "Omega_rf = {:e}", drive.omega);
    let _ = writeln!(m, "charge = {:e}", sp.charge);
    let _ = writeln!(m, "mass = {:e}", sp.mass);
    save_field(model.rf_basis(), dir.join("rf.field"))?;
    let _ = writeln!(m, "rf = rf.field");
    for e in model.electrodes() {
        let file = format!("{}.field", e.name);
        save_field(&e.field, dir.join(&file))?;
        let _ = writeln!(m, "electrode {} = {}", e.name, file);
    }
    let path = dir.join("trap.manifest");
    fs::write(&path, m).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

pub fn load_model(manifest: impl AsRef<Path>) -> Result<TrapModel> {
    let path = manifest.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut v_rf = None;
    let mut omega = None;
    let mut charge = None;
    let mut mass = None;
    let mut rf = None;
    let mut electrodes = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| parse_err(path, no, "expected `key = value`"))?;
        let (key, value) = (key.trim(), value.trim());
        let num = || {
            value
                .parse::<f64>()
                .map_err(|e| parse_err(path, no, format!("{key}: {e}")))
        };
        match key {
            "V_rf" => v_rf = Some(num()?),
            "Omega_rf" => omega = Some(num()?),
            "charge" => charge = Some(num()?),
            "mass" => mass = Some(num()?),
            "rf" => rf = Some(load_field(base.join(value))?),
            _ => match key.strip_prefix("electrode") {
                Some(name) if !name.trim().is_empty() => electrodes.push(Electrode {
                    name: name.trim().to_string(),
                    field: load_field(base.join(value))?,
                }),
                _ => return Err(parse_err(path, no, format!("unknown key `{key}`"))),
            },
        }
    }
    let missing = |k: &str| parse_err(path, 0, format!("manifest is missing `{k}`"));
    TrapModel::new(
        electrodes,
        rf.ok_or_else(|| missing("rf"))?,
        RfDrive {
            amplitude: v_rf.ok_or_else(|| missing("V_rf"))?,
            omega: omega.ok_or_else(|| missing("Omega_rf"))?,
        },
        Species {
            charge: charge.ok_or_else(|| missing("charge"))?,
            mass: mass.ok_or_else(|| missing("mass"))?,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zeros_text(count: usize) -> String {
        let mut s = "origin 0 0 0\nspacing 5e-6 5e-6 5e-6\ndims 4 4 4\n".to_string();
        for _ in 0..count {
            s.push_str("0 ");
        }
        s
    }

    #[test]
    fn zero_field_parses() {
        let f = parse_field(&zeros_text(64), Path::new("z")).unwrap();
        assert_eq!(f.values.len(), 64);
        assert!(f.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn wrong_count_is_dimension_mismatch() {
        let err = parse_field(&zeros_text(63), Path::new("z")).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { expected: 64, found: 63 }));
    }

    #[test]
    fn bad_header_and_nan_rejected() {
        let bad = zeros_text(64).replace("spacing", "spaceing");
        assert!(matches!(
            parse_field(&bad, Path::new("z")),
            Err(Error::Parse { line: 2, .. })
        ));
        let nan = zeros_text(63) + "NaN";
        assert!(matches!(
            parse_field(&nan, Path::new("z")),
            Err(Error::NonFinite { index: 63 })
        ));
    }
}
