//! Per-command parameter records. A config file holds one `[section]` per
//! command; keys missing from the file take the defaults below and command
//! line flags override both.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::GridDomain;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub oracle: OracleParams,
    #[serde(default)]
    pub solve: SolveParams,
    #[serde(default)]
    pub verify: VerifyParams,
    #[serde(default, rename = "diff-network")]
    pub diff_network: DiffNetworkParams,
    #[serde(default)]
    pub assemble: AssembleParams,
    #[serde(default, rename = "probe-yeti")]
    pub probe_yeti: ProbeYetiParams,
    #[serde(default)]
    pub export: ExportParams,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {}", path.display(), e.message())))
    }
}

/// `x_min,x_max,y_min,y_max,h` or `x_min,x_max,y_min,y_max,nx,ny`.
pub fn parse_grid(spec: &str) -> Result<GridDomain> {
    let bad = || {
        Error::Config(format!(
            "grid must be x_min,x_max,y_min,y_max,h or ...,nx,ny; got {spec:?}"
        ))
    };
    let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
    let num = |k: usize| parts[k].parse::<f64>().map_err(|_| bad());
    match parts.len() {
        5 => GridDomain::with_spacing(num(0)?, num(1)?, num(2)?, num(3)?, num(4)?),
        6 => {
            let n = |k: usize| parts[k].parse::<usize>().map_err(|_| bad());
            GridDomain::new(num(0)?, num(1)?, num(2)?, num(3)?, n(4)?, n(5)?)
        }
        _ => Err(bad()),
    }
}

fn pair(v: &[f64], name: &str) -> Result<(f64, f64)> {
    match v {
        [a, b] if a <= b => Ok((*a, *b)),
        _ => Err(Error::Config(format!(
            "{name} must be two increasing numbers"
        ))),
    }
}

/// Default width for a family: `pi` for pitchforks, `pi / 2` otherwise.
pub fn default_width(family: &str) -> f64 {
    if family == "helicoid" {
        PI / 2.0
    } else {
        PI
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleParams {
    /// `reaper` or `pitchfork-left`.
    pub family: String,
    pub c: f64,
    /// Sign of the linear term: -1, 0 or 1.
    pub tilt: f64,
    pub shift: f64,
    pub y_center: f64,
    /// Strip width of the `pitchfork-left` model.
    pub w: f64,
    pub grid: String,
}

impl Default for OracleParams {
    fn default() -> Self {
        OracleParams {
            family: "reaper".into(),
            c: 1.0,
            tilt: 0.0,
            shift: 0.0,
            y_center: 0.0,
            w: PI,
            grid: "-1,1,-1.5,1.5,0.05".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveParams {
    /// `pitchfork`, `helicoid` or `yeti`.
    pub family: String,
    /// Strip width; defaults by family.
    pub w: Option<f64>,
    /// Helicoid top-edge jump.
    pub a: f64,
    pub x_min: f64,
    pub x_max: f64,
    /// Distance kept from the singular boundary lines.
    pub margin: f64,
    /// Top of the yeti truncation.
    pub y_max: f64,
    pub h: f64,
    pub cap: f64,
    pub caps: Vec<f64>,
    pub max_newton_iters: usize,
    pub residual_tol: f64,
    /// Initial guess; the boundary interpolant when absent.
    pub init: Option<PathBuf>,
    /// Amplitude of a uniform random perturbation of the initial guess.
    pub perturb: f64,
    pub seed: u64,
}

impl Default for SolveParams {
    fn default() -> Self {
        SolveParams {
            family: "pitchfork".into(),
            w: None,
            a: 0.0,
            x_min: -12.0,
            x_max: 12.0,
            margin: 0.05,
            y_max: 6.0,
            h: 0.1,
            cap: 6.0,
            caps: vec![1.0, 2.0, 4.0],
            max_newton_iters: 50,
            residual_tol: 1e-10,
            init: None,
            perturb: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyParams {
    pub field: Option<PathBuf>,
    /// `pitchfork` or `helicoid`.
    pub family: String,
    pub w: Option<f64>,
    /// Second solve on another truncation for the Gauss-map comparison.
    pub compare: Option<PathBuf>,
    pub stride: usize,
    /// Left probe column; `x_min + 1` when absent.
    pub x_probe: Option<f64>,
    /// Right probe column; `x_max - 1` when absent.
    pub x_right: Option<f64>,
    pub y_band: Vec<f64>,
    pub psi_tol: f64,
    pub gauss_tol: f64,
    pub normal_tol: f64,
}

impl Default for VerifyParams {
    fn default() -> Self {
        VerifyParams {
            field: None,
            family: "pitchfork".into(),
            w: None,
            compare: None,
            stride: 2,
            x_probe: None,
            x_right: None,
            y_band: vec![0.5, 2.5],
            psi_tol: 0.1,
            gauss_tol: 0.05,
            normal_tol: 0.1,
        }
    }
}

impl VerifyParams {
    pub fn band(&self) -> Result<(f64, f64)> {
        pair(&self.y_band, "y_band")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiffNetworkParams {
    pub field: Option<PathBuf>,
    /// Second field; the first one again when absent.
    pub field2: Option<PathBuf>,
    /// `g(p) = f1(p) - f2(p + v)`.
    pub shift: Vec<f64>,
    /// Subtract `g` at its most critical node before extraction.
    pub normalize: bool,
    pub iso: f64,
    /// Flat list of `x, y` pairs of singular boundary points.
    pub singular: Vec<f64>,
}

impl Default for DiffNetworkParams {
    fn default() -> Self {
        DiffNetworkParams {
            field: None,
            field2: None,
            shift: vec![0.0, 0.0],
            normalize: false,
            iso: 0.0,
            singular: Vec::new(),
        }
    }
}

impl DiffNetworkParams {
    pub fn shift_vector(&self) -> Result<[f64; 2]> {
        match self.shift[..] {
            [a, b] => Ok([a, b]),
            _ => Err(Error::Config("shift must have two components".into())),
        }
    }

    pub fn singular_points(&self) -> Result<Vec<(f64, f64)>> {
        if self.singular.len() % 2 != 0 {
            return Err(Error::Config("singular must list x, y pairs".into()));
        }
        Ok(self.singular.chunks(2).map(|c| (c[0], c[1])).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssembleParams {
    pub field: Option<PathBuf>,
    /// `pitchfork` or `helicoid`.
    pub family: String,
    pub a: f64,
    pub w: Option<f64>,
    pub copies: usize,
    /// Segments per seam polyline.
    pub levels: usize,
    /// Grid stride applied before meshing.
    pub decimate: usize,
    /// Run the brute-force embedding check on a mesh of at most 5000 triangles.
    pub check_embedding: bool,
}

impl Default for AssembleParams {
    fn default() -> Self {
        AssembleParams {
            field: None,
            family: "pitchfork".into(),
            a: 0.0,
            w: None,
            copies: 1,
            levels: 16,
            decimate: 1,
            check_embedding: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeYetiParams {
    /// Half-widths `L` of the truncations `[-L, L]`.
    pub truncations: Vec<f64>,
    pub caps: Vec<f64>,
    pub y_min: f64,
    pub y_max: f64,
    pub h: f64,
    /// Ridge and witness columns start here.
    pub x_start: f64,
    /// Height bound of the descent witnesses; `y_max` when absent.
    pub witness_c: Option<f64>,
    pub shifts: Vec<f64>,
    pub anchor_y: f64,
    pub max_newton_iters: usize,
}

impl Default for ProbeYetiParams {
    fn default() -> Self {
        ProbeYetiParams {
            truncations: vec![6.0, 8.0],
            caps: vec![4.0, 6.0],
            y_min: 0.05,
            y_max: 6.0,
            h: 0.1,
            x_start: 1.0,
            witness_c: None,
            shifts: vec![2.0, 4.0, 8.0],
            anchor_y: 1.0,
            max_newton_iters: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExportParams {
    pub field: Option<PathBuf>,
    /// `gauss-map`, `slope-profile`, `ridge` or `mesh`.
    pub kind: String,
    pub stride: usize,
    /// Column of the slope profile; `x_min + 1` when absent.
    pub x_probe: Option<f64>,
    /// Ridge search window in y; the whole column when absent.
    pub y_window: Option<Vec<f64>>,
}

impl Default for ExportParams {
    fn default() -> Self {
        ExportParams {
            field: None,
            kind: "gauss-map".into(),
            stride: 1,
            x_probe: None,
            y_window: None,
        }
    }
}

impl ExportParams {
    pub fn window(&self) -> Result<Option<(f64, f64)>> {
        self.y_window
            .as_deref()
            .map(|w| pair(w, "y_window"))
            .transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_specs() {
        let d = parse_grid("-1,1,0,2,0.5").unwrap();
        assert_eq!((d.nx(), d.ny()), (5, 5));
        let d = parse_grid(" -1, 1, 0, 2, 3, 7").unwrap();
        assert_eq!((d.nx(), d.ny()), (3, 7));
        assert!(parse_grid("0,1,0,1").is_err());
        assert!(parse_grid("0,1,0,1,x").is_err());
    }

    #[test]
    fn file_sections() {
        let f: ConfigFile =
            toml::from_str("[solve]\nh = 0.2\ncaps = [1.0, 3.0]\n[probe-yeti]\nshifts = [2.0]\n")
                .unwrap();
        assert_eq!(f.solve.h, 0.2);
        assert_eq!(f.solve.caps, vec![1.0, 3.0]);
        assert_eq!(f.solve.cap, 6.0);
        assert_eq!(f.probe_yeti.shifts, vec![2.0]);
        assert_eq!(f.oracle, OracleParams::default());
        assert!(toml::from_str::<ConfigFile>("[solve]\nbogus = 1\n").is_err());
        assert!(toml::from_str::<ConfigFile>("[nonsense]\nh = 1\n").is_err());
    }

    #[test]
    fn resolved_params_round_trip() {
        let p = SolveParams {
            w: Some(4.0),
            init: Some("a.field.csv".into()),
            ..Default::default()
        };
        let text = toml::to_string(&p).unwrap();
        let back: SolveParams = toml::from_str(&text).unwrap();
        assert_eq!(back, p);
    }
}
