//! Shape, map and report files.
//!
//! Every float is written with 17 significant digits, so values survive a
//! write/read cycle bit for bit. Non-finite values become `null` in JSON and
//! `inf` / `-inf` / `nan` in CSV.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use mobius_energy_core::compactness::Annulus;
use mobius_energy_core::mesh::Face;
use mobius_energy_core::moebius::{MoebiusMap, Primitive};
use mobius_energy_core::{ClosedCurve, PointN, Points, SphereMesh};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::ser::Formatter;

use crate::error::{CliError, CliResult};

/// `printf("%.17g")`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..17).contains(&exp) {
        return format!("{}e{exp}", trim_zeros(mantissa));
    }
    trim_zeros(&format!("{x:.*}", (16 - exp) as usize)).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

struct Digits17;

impl Formatter for Digits17 {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(fmt_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }
}

/// Compact JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Digits17);
    value
        .serialize(&mut ser)
        .map_err(|e| CliError::Format(e.to_string()))?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    serde_json::from_str(&read_text(path)?)
        .map_err(|e| CliError::Format(format!("{}: {e}", path.display())))
}

/// Writes to `path`, or to stdout when `path` is `None`.
pub fn emit(path: Option<&Path>, contents: &str) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, contents).map_err(|source| CliError::Io {
            path: p.display().to_string(),
            source,
        }),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(contents.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|source| CliError::Io {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}

/// Comma-separated table with a header row.
pub fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for row in rows {
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

fn rows(points: &Points) -> Vec<Vec<f64>> {
    points.to_rows()
}

fn points_from(n: usize, rows: &[Vec<f64>], what: &str) -> CliResult<Points> {
    Points::from_rows(n, rows).map_err(|e| CliError::Format(format!("{what}: {e}")))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurveFile {
    pub n: usize,
    pub points: Vec<Vec<f64>>,
}

impl CurveFile {
    pub fn from_curve(c: &ClosedCurve) -> Self {
        CurveFile {
            n: c.dim(),
            points: rows(c.points()),
        }
    }

    pub fn to_curve(&self) -> CliResult<ClosedCurve> {
        Ok(ClosedCurve::new(points_from(
            self.n,
            &self.points,
            "points",
        )?)?)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeshFile {
    pub n: usize,
    pub domain: Vec<Vec<f64>>,
    pub image: Vec<Vec<f64>>,
    pub faces: Vec<Face>,
}

impl MeshFile {
    pub fn from_mesh(m: &SphereMesh) -> Self {
        MeshFile {
            n: m.dim(),
            domain: rows(m.domain()),
            image: rows(m.image()),
            faces: m.faces().to_vec(),
        }
    }

    pub fn to_mesh(&self) -> CliResult<SphereMesh> {
        let domain = points_from(3, &self.domain, "domain")?;
        let image = points_from(self.n, &self.image, "image")?;
        Ok(SphereMesh::new(domain, image, self.faces.clone())?)
    }
}

/// An annulus with named boundary loops.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnnulusFile {
    pub n: usize,
    pub points: Vec<Vec<f64>>,
    pub faces: Vec<Face>,
    pub loops: BTreeMap<String, Vec<usize>>,
}

impl AnnulusFile {
    pub fn from_annulus(a: &Annulus) -> Self {
        let loops = BTreeMap::from([
            ("loop0".to_string(), a.inner.clone()),
            ("loop1".to_string(), a.outer.clone()),
        ]);
        AnnulusFile {
            n: a.points.dim(),
            points: rows(&a.points),
            faces: a.faces.clone(),
            loops,
        }
    }

    pub fn points(&self) -> CliResult<Points> {
        points_from(self.n, &self.points, "points")
    }

    pub fn get_loop(&self, name: &str) -> CliResult<&[usize]> {
        self.loops.get(name).map(Vec::as_slice).ok_or_else(|| {
            let known: Vec<&str> = self.loops.keys().map(String::as_str).collect();
            CliError::Parameter(format!(
                "no loop named {name:?} (have {})",
                known.join(", ")
            ))
        })
    }
}

/// A curve or a sphere mesh read from a JSON shape file.
#[derive(Debug, Clone)]
pub enum ShapeFile {
    Curve(ClosedCurve),
    Mesh(SphereMesh),
}

impl ShapeFile {
    pub fn to_json(&self) -> CliResult<String> {
        match self {
            ShapeFile::Curve(c) => to_json(&CurveFile::from_curve(c)),
            ShapeFile::Mesh(m) => to_json(&MeshFile::from_mesh(m)),
        }
    }
}

/// Reads a shape: JSON files holding `faces` are meshes, other JSON files
/// curves. `.off` files are meshes and need `radial_domain`.
pub fn read_shape(path: &Path, radial_domain: bool) -> CliResult<ShapeFile> {
    let text = read_text(path)?;
    let is_off = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("off"));
    if is_off {
        if !radial_domain {
            return Err(CliError::Parameter(format!(
                "{}: OFF files carry no domain; pass --radial-domain",
                path.display()
            )));
        }
        let (image, faces) =
            parse_off(&text).map_err(|e| CliError::Format(format!("{}: {e}", path.display())))?;
        return Ok(ShapeFile::Mesh(SphereMesh::with_radial_domain(
            image, faces,
        )?));
    }
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Format(format!("{}: {e}", path.display())))?;
    let bad = |e: serde_json::Error| CliError::Format(format!("{}: {e}", path.display()));
    if value.get("faces").is_some() {
        let file: MeshFile = serde_json::from_value(value).map_err(bad)?;
        if radial_domain {
            let image = points_from(file.n, &file.image, "image")?;
            return Ok(ShapeFile::Mesh(SphereMesh::with_radial_domain(
                image, file.faces,
            )?));
        }
        Ok(ShapeFile::Mesh(file.to_mesh()?))
    } else {
        let file: CurveFile = serde_json::from_value(value).map_err(bad)?;
        Ok(ShapeFile::Curve(file.to_curve()?))
    }
}

pub fn read_mesh(path: &Path, radial_domain: bool) -> CliResult<SphereMesh> {
    match read_shape(path, radial_domain)? {
        ShapeFile::Mesh(m) => Ok(m),
        ShapeFile::Curve(_) => Err(CliError::Parameter(format!(
            "{}: expected a mesh, found a curve",
            path.display()
        ))),
    }
}

/// Object File Format with triangular faces.
pub fn parse_off(text: &str) -> Result<(Points, Vec<Face>), String> {
    let mut tokens = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(str::split_whitespace);
    if tokens.next() != Some("OFF") {
        return Err("missing OFF header".into());
    }
    let mut count = |what: &str| -> Result<usize, String> {
        tokens
            .next()
            .ok_or(format!("missing {what}"))?
            .parse::<usize>()
            .map_err(|e| format!("{what}: {e}"))
    };
    let (nv, nf, _ne) = (
        count("vertex count")?,
        count("face count")?,
        count("edge count")?,
    );
    let mut coords = Vec::with_capacity(3 * nv);
    for i in 0..3 * nv {
        let t = tokens.next().ok_or(format!("missing coordinate {i}"))?;
        coords.push(
            t.parse::<f64>()
                .map_err(|e| format!("coordinate {i}: {e}"))?,
        );
    }
    let mut faces = Vec::with_capacity(nf);
    for f in 0..nf {
        let mut index = || -> Result<usize, String> {
            tokens
                .next()
                .ok_or(format!("face {f} truncated"))?
                .parse::<usize>()
                .map_err(|e| format!("face {f}: {e}"))
        };
        if index()? != 3 {
            return Err(format!("face {f} is not a triangle"));
        }
        faces.push([index()?, index()?, index()?]);
    }
    let points = Points::from_flat(3, coords).map_err(|e| e.to_string())?;
    Ok((points, faces))
}

/// One primitive of a map file, e.g. `{"inversion": {"c": [0, 0, 3], "rho": 1}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrimitiveSpec {
    Inversion {
        c: Vec<f64>,
        rho: f64,
    },
    Translation(Vec<f64>),
    Scaling(f64),
    /// Rows of an orthogonal matrix.
    Orthogonal(Vec<Vec<f64>>),
}

impl PrimitiveSpec {
    pub fn from_primitive(p: &Primitive) -> Self {
        match p {
            Primitive::Inversion { center, radius } => PrimitiveSpec::Inversion {
                c: center.0.clone(),
                rho: *radius,
            },
            Primitive::Translation(t) => PrimitiveSpec::Translation(t.0.clone()),
            Primitive::Scaling(s) => PrimitiveSpec::Scaling(*s),
            Primitive::Orthogonal { dim, matrix } => {
                PrimitiveSpec::Orthogonal(matrix.chunks(*dim).map(<[f64]>::to_vec).collect())
            }
        }
    }

    pub fn to_primitive(&self) -> CliResult<Primitive> {
        Ok(match self {
            PrimitiveSpec::Inversion { c, rho } => Primitive::Inversion {
                center: PointN(c.clone()),
                radius: *rho,
            },
            PrimitiveSpec::Translation(t) => Primitive::Translation(PointN(t.clone())),
            PrimitiveSpec::Scaling(s) => Primitive::Scaling(*s),
            PrimitiveSpec::Orthogonal(rows) => {
                let dim = rows.len();
                if rows.iter().any(|r| r.len() != dim) {
                    return Err(CliError::Format("orthogonal matrix must be square".into()));
                }
                Primitive::Orthogonal {
                    dim,
                    matrix: rows.concat(),
                }
            }
        })
    }
}

pub fn map_to_specs(map: &MoebiusMap) -> Vec<PrimitiveSpec> {
    map.primitives()
        .iter()
        .map(PrimitiveSpec::from_primitive)
        .collect()
}

pub fn read_map(path: &Path) -> CliResult<MoebiusMap> {
    let specs: Vec<PrimitiveSpec> = read_json(path)?;
    let prims = specs
        .iter()
        .map(PrimitiveSpec::to_primitive)
        .collect::<CliResult<Vec<_>>>()?;
    Ok(MoebiusMap::new(prims)?)
}
