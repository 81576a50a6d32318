//! `.field.csv` reader and writer.
//!
//! Layout: `key=value` header lines for `x_min`, `x_max`, `y_min`, `y_max`,
//! `nx`, `ny` (optionally followed by `anchor_x`, `anchor_y`,
//! `anchor_value`), then `nx * ny` values in row-major order, one per line.
//! Floats are printed in shortest round-trip form, so a write/read cycle is
//! bit-exact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{Anchor, GridDomain, ScalarField};
use crate::error::{Error, Result};

pub const FIELD_EXTENSION: &str = "field.csv";

pub fn to_string(u: &ScalarField) -> String {
    let d = u.domain();
    let mut out = String::with_capacity(24 * d.len() + 128);
    let _ = writeln!(out, "x_min={:?}", d.x_min());
    let _ = writeln!(out, "x_max={:?}", d.x_max());
    let _ = writeln!(out, "y_min={:?}", d.y_min());
    let _ = writeln!(out, "y_max={:?}", d.y_max());
    let _ = writeln!(out, "nx={}", d.nx());
    let _ = writeln!(out, "ny={}", d.ny());
    if let Some(a) = u.anchor() {
        let _ = writeln!(out, "anchor_x={:?}", a.x);
        let _ = writeln!(out, "anchor_y={:?}", a.y);
        let _ = writeln!(out, "anchor_value={:?}", a.value);
    }
    for v in u.values() {
        let _ = writeln!(out, "{v:?}");
    }
    out
}

pub fn from_str(text: &str, origin: &Path) -> Result<ScalarField> {
    let err = |msg: String| Error::Parse {
        path: origin.to_path_buf(),
        msg,
    };
    let mut header = std::collections::BTreeMap::new();
    let mut values = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some((k, v)) = line.split_once('=') {
            if !values.is_empty() {
                return Err(err(format!("line {}: header after values", lineno + 1)));
            }
            header.insert(k.trim().to_string(), v.trim().to_string());
        } else {
            let v: f64 = line
                .parse()
                .map_err(|_| err(format!("line {}: bad value {line:?}", lineno + 1)))?;
            values.push(v);
        }
    }
    let get_f = |k: &str| -> Result<f64> {
        header
            .get(k)
            .ok_or_else(|| err(format!("missing header key {k}")))?
            .parse()
            .map_err(|_| err(format!("bad header value for {k}")))
    };
    let get_u = |k: &str| -> Result<usize> {
        header
            .get(k)
            .ok_or_else(|| err(format!("missing header key {k}")))?
            .parse()
            .map_err(|_| err(format!("bad header value for {k}")))
    };
    for k in header.keys() {
        let known = matches!(
            k.as_str(),
            "x_min"
                | "x_max"
                | "y_min"
                | "y_max"
                | "nx"
                | "ny"
                | "anchor_x"
                | "anchor_y"
                | "anchor_value"
        );
        if !known {
            return Err(err(format!("unknown header key {k}")));
        }
    }
    let domain = GridDomain::new(
        get_f("x_min")?,
        get_f("x_max")?,
        get_f("y_min")?,
        get_f("y_max")?,
        get_u("nx")?,
        get_u("ny")?,
    )?;
    let anchor = if header.contains_key("anchor_value") {
        Some(Anchor {
            x: get_f("anchor_x")?,
            y: get_f("anchor_y")?,
            value: get_f("anchor_value")?,
        })
    } else {
        None
    };
    Ok(ScalarField::new(domain, values)?.with_anchor(anchor))
}

pub fn write_field(path: impl AsRef<Path>, u: &ScalarField) -> Result<()> {
    fs::write(path, to_string(u))?;
    Ok(())
}

pub fn read_field(path: impl AsRef<Path>) -> Result<ScalarField> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    from_str(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(vals in proptest::collection::vec(-1e300..1e300f64, 12),
                                   tiny in -1e-300..1e-300f64) {
            let d = GridDomain::new(-0.1, 3.3, 1e-7, 2.0, 4, 3).unwrap();
            let mut vals = vals;
            vals[5] = tiny;
            vals[6] = -0.0;
            let u = ScalarField::new(d, vals).unwrap();
            let back = from_str(&to_string(&u), Path::new("mem")).unwrap();
            prop_assert_eq!(back.domain(), u.domain());
            for (a, b) in back.values().iter().zip(u.values()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn anchor_survives_round_trip() {
        let d = GridDomain::new(0.0, 1.0, 0.0, 1.0, 3, 3).unwrap();
        let u = ScalarField::from_fn(d, |x, y| x - y)
            .unwrap()
            .anchored_at(1, 1, 2.0)
            .unwrap();
        let back = from_str(&to_string(&u), Path::new("mem")).unwrap();
        assert_eq!(back, u);
    }

    #[test]
    fn rejects_malformed_files() {
        let p = Path::new("mem");
        assert!(from_str("x_min=0\nx_max=1\ny_min=0\ny_max=1\nnx=3\n", p).is_err());
        assert!(from_str("x_min=0\nx_max=1\ny_min=0\ny_max=1\nnx=3\nny=3\n1\n2\n", p).is_err());
        assert!(from_str("x_min=0\nbogus=1\n", p).is_err());
        let ok =
            "x_min=0\nx_max=1\ny_min=0\ny_max=1\nnx=3\nny=3\n".to_string() + &"0.5\n".repeat(9);
        assert!(from_str(&ok, p).is_ok());
        assert!(from_str(&(ok.clone() + "nan\n"), p).is_err());
    }
}
