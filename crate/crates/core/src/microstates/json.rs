//! Presentation files: JSON with a `kind` tag; matrix models reference
//! HTUP1 tuple files by relative path.

use std::path::Path;

use serde_json::{json, Value};

use super::{MicrostateError, Presentation};
use crate::matrixcore::{read_tuple, write_tuple};
use crate::ncpoly::{parse_poly, PolyBattery};

pub fn load_presentation(path: &Path) -> Result<Presentation, MicrostateError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| MicrostateError::BadFile(format!("{}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&text)
        .map_err(|e| MicrostateError::BadFile(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let p = presentation_from_json(&v, base)?;
    p.validate()?;
    Ok(p)
}

pub fn presentation_from_json(v: &Value, base_dir: &Path) -> Result<Presentation, MicrostateError> {
    let kind = v
        .get("kind")
        .and_then(Value::as_str)
        .ok_or_else(|| MicrostateError::BadFile("missing \"kind\" field".into()))?;
    match kind {
        "spectrum" => {
            let points = f64_array(v, "points")?;
            Ok(Presentation::Spectrum { points })
        }
        "matrix_model" => {
            let rel = v
                .get("tuple")
                .and_then(Value::as_str)
                .ok_or_else(|| MicrostateError::BadFile("matrix_model needs \"tuple\" path".into()))?;
            let tuple = read_tuple(&base_dir.join(rel))?;
            Ok(Presentation::MatrixModel { tuple })
        }
        "norm_table" => {
            let exprs = v
                .get("battery")
                .and_then(Value::as_array)
                .ok_or_else(|| MicrostateError::BadFile("norm_table needs \"battery\"".into()))?;
            let n = v
                .get("generators")
                .and_then(Value::as_u64)
                .ok_or_else(|| MicrostateError::BadFile("norm_table needs \"generators\"".into()))?
                as usize;
            let mut polys = Vec::with_capacity(exprs.len());
            for e in exprs {
                let s = e
                    .as_str()
                    .ok_or_else(|| MicrostateError::BadFile("battery entries are strings".into()))?;
                polys.push(parse_poly(s, n)?);
            }
            let battery = PolyBattery::new(polys, "norm_table")?;
            let targets = f64_array(v, "targets")?;
            let radius = v
                .get("radius")
                .and_then(Value::as_f64)
                .ok_or_else(|| MicrostateError::BadFile("norm_table needs \"radius\"".into()))?;
            Ok(Presentation::NormTable {
                battery,
                targets,
                radius,
            })
        }
        "free_product" | "direct_sum" => {
            let left = presentation_from_json(
                v.get("left")
                    .ok_or_else(|| MicrostateError::BadFile(format!("{kind} needs \"left\"")))?,
                base_dir,
            )?;
            let right = presentation_from_json(
                v.get("right")
                    .ok_or_else(|| MicrostateError::BadFile(format!("{kind} needs \"right\"")))?,
                base_dir,
            )?;
            if kind == "free_product" {
                Ok(Presentation::FreeProduct {
                    left: Box::new(left),
                    right: Box::new(right),
                })
            } else {
                Ok(Presentation::DirectSum {
                    left: Box::new(left),
                    right: Box::new(right),
                })
            }
        }
        "amplification" => {
            let base = presentation_from_json(
                v.get("base")
                    .ok_or_else(|| MicrostateError::BadFile("amplification needs \"base\"".into()))?,
                base_dir,
            )?;
            let n = v
                .get("n")
                .and_then(Value::as_u64)
                .ok_or_else(|| MicrostateError::BadFile("amplification needs \"n\"".into()))?
                as usize;
            Ok(Presentation::Amplification {
                base: Box::new(base),
                n,
            })
        }
        other => Err(MicrostateError::BadFile(format!(
            "unknown presentation kind \"{other}\""
        ))),
    }
}

fn f64_array(v: &Value, field: &str) -> Result<Vec<f64>, MicrostateError> {
    v.get(field)
        .and_then(Value::as_array)
        .ok_or_else(|| MicrostateError::BadFile(format!("missing \"{field}\" array")))?
        .iter()
        .map(|x| {
            x.as_f64()
                .ok_or_else(|| MicrostateError::BadFile(format!("\"{field}\" entries are numbers")))
        })
        .collect()
}

/// Serialize; matrix models write an HTUP1 sibling named
/// `<stem>_model<i>.htup` under `dir`.
pub fn presentation_to_json(
    p: &Presentation,
    dir: &Path,
    stem: &str,
    counter: &mut usize,
) -> Result<Value, MicrostateError> {
    Ok(match p {
        Presentation::Spectrum { points } => json!({"kind": "spectrum", "points": points}),
        Presentation::MatrixModel { tuple } => {
            let name = format!("{stem}_model{counter}.htup");
            *counter += 1;
            write_tuple(&dir.join(&name), tuple)?;
            json!({"kind": "matrix_model", "tuple": name})
        }
        Presentation::NormTable {
            battery,
            targets,
            radius,
        } => {
            let exprs: Vec<String> = battery.polys().iter().map(|p| p.to_string()).collect();
            json!({
                "kind": "norm_table",
                "generators": battery.num_indeterminates(),
                "battery": exprs,
                "targets": targets,
                "radius": radius,
            })
        }
        Presentation::FreeProduct { left, right } => json!({
            "kind": "free_product",
            "left": presentation_to_json(left, dir, stem, counter)?,
            "right": presentation_to_json(right, dir, stem, counter)?,
        }),
        Presentation::DirectSum { left, right } => json!({
            "kind": "direct_sum",
            "left": presentation_to_json(left, dir, stem, counter)?,
            "right": presentation_to_json(right, dir, stem, counter)?,
        }),
        Presentation::Amplification { base, n } => json!({
            "kind": "amplification",
            "base": presentation_to_json(base, dir, stem, counter)?,
            "n": n,
        }),
    })
}

pub fn save_presentation(path: &Path, p: &Presentation) -> Result<(), MicrostateError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "presentation".into());
    let mut counter = 0usize;
    let v = presentation_to_json(p, dir, &stem, &mut counter)?;
    let text = serde_json::to_string_pretty(&v)
        .map_err(|e| MicrostateError::BadFile(e.to_string()))?;
    std::fs::write(path, text).map_err(|e| MicrostateError::BadFile(e.to_string()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrixcore::{gue_hermitian, MatrixTuple};

    #[test]
    fn round_trip_nested_presentation() {
        let p = Presentation::FreeProduct {
            left: Box::new(Presentation::Spectrum {
                points: vec![0.0, 1.0],
            }),
            right: Box::new(Presentation::Amplification {
                base: Box::new(Presentation::MatrixModel {
                    tuple: MatrixTuple::new(vec![gue_hermitian(2, 4, 1.0)]).unwrap(),
                }),
                n: 2,
            }),
        };
        let dir = std::env::temp_dir().join("freedim-json-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("p.json");
        save_presentation(&path, &p).unwrap();
        let back = load_presentation(&path).unwrap();
        assert_eq!(p, back);
    }

    #[test]
    fn rejects_unknown_kind() {
        let v: Value = serde_json::json!({"kind": "mystery"});
        assert!(presentation_from_json(&v, Path::new(".")).is_err());
    }
}
