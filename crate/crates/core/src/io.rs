//! File formats: point clouds (JSON or CSV), square distance matrices, fragments,
//! representations, function tables and id lists.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alberti::AlbertiRep;
use crate::field::{FieldError, VectorField};
use crate::fragment::{Fragment, FragmentError};
use crate::space::{DistSpec, FiniteMetricSpace, Metric, Point, SpaceError};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: String, source: serde_json::Error },
    #[error("{path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("{path}: {reason}")]
    Format { path: String, reason: String },
    #[error("unknown point id {0:?}")]
    UnknownId(String),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Fragment(#[from] FragmentError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

fn read(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::Read { path: path.display().to_string(), source })
}

fn format_err(path: &Path, reason: impl Into<String>) -> IoError {
    IoError::Format { path: path.display().to_string(), reason: reason.into() }
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coords: Option<Vec<f64>>,
    #[serde(default = "unit")]
    pub weight: f64,
}

fn unit() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceFile {
    pub points: Vec<PointRecord>,
    pub metric: Metric,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
}

impl SpaceFile {
    pub fn from_space(space: &FiniteMetricSpace) -> Self {
        let points = (0..space.len())
            .map(|i| PointRecord {
                id: space.id(i).to_string(),
                coords: space.coords(i).map(|c| c.to_vec()),
                weight: space.weight(i),
            })
            .collect();
        let matrix = (space.metric() == Metric::Matrix).then(|| space.distance_matrix());
        SpaceFile { points, metric: space.metric(), matrix }
    }

    pub fn into_space(self, tol: f64) -> Result<FiniteMetricSpace, SpaceError> {
        let weights = self.points.iter().map(|p| p.weight).collect();
        let points = self.points.into_iter().map(|p| Point { id: p.id, coords: p.coords }).collect();
        let spec = match self.metric {
            Metric::Euclidean => DistSpec::Euclidean,
            Metric::Max => DistSpec::Max,
            Metric::Matrix => DistSpec::Matrix(self.matrix.ok_or(SpaceError::Generator("matrix metric without matrix".into()))?),
        };
        FiniteMetricSpace::build(points, spec, weights, tol)
    }
}

/// Reads a space from JSON, or from CSV with header `id,x1..xd,weight`
/// (`metric` chooses Euclidean or max distances for CSV input).
pub fn read_space(path: &Path, csv_metric: Metric, tol: f64) -> Result<FiniteMetricSpace, IoError> {
    let text = read(path)?;
    if is_json(path) {
        let file: SpaceFile =
            serde_json::from_str(&text).map_err(|source| IoError::Json { path: path.display().to_string(), source })?;
        return Ok(file.into_space(tol)?);
    }
    let csv_err = |source| IoError::Csv { path: path.display().to_string(), source };
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = rdr.headers().map_err(csv_err)?.clone();
    if header.len() < 2 || &header[0] != "id" || &header[header.len() - 1] != "weight" {
        return Err(format_err(path, "expected header id,x1..xd,weight"));
    }
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let nums: Result<Vec<f64>, _> = rec.iter().skip(1).map(str::parse::<f64>).collect();
        let nums = nums.map_err(|e| format_err(path, format!("row {}: {e}", points.len() + 1)))?;
        let (w, coords) = nums.split_last().ok_or_else(|| format_err(path, "empty row"))?;
        points.push(Point::new(&rec[0], coords.to_vec()));
        weights.push(*w);
    }
    let spec = if csv_metric == Metric::Max { DistSpec::Max } else { DistSpec::Euclidean };
    Ok(FiniteMetricSpace::build(points, spec, weights, tol)?)
}

/// Square distance matrix CSV without header; ids `p0, p1, ...`.
pub fn read_matrix_space(path: &Path, weights: Option<Vec<f64>>, tol: f64) -> Result<FiniteMetricSpace, IoError> {
    let text = read(path)?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|source| IoError::Csv { path: path.display().to_string(), source })?;
        let row: Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        rows.push(row.map_err(|e| format_err(path, e.to_string()))?);
    }
    let n = rows.len();
    let points = (0..n).map(|i| Point::bare(format!("p{i}"))).collect();
    let weights = weights.unwrap_or_else(|| vec![1.0; n]);
    Ok(FiniteMetricSpace::build(points, DistSpec::Matrix(rows), weights, tol)?)
}

pub fn space_json(space: &FiniteMetricSpace) -> serde_json::Value {
    serde_json::to_value(SpaceFile::from_space(space)).expect("space file serializes")
}

fn lookup(space: &FiniteMetricSpace, id: &str) -> Result<usize, IoError> {
    space.index_of(id).ok_or_else(|| IoError::UnknownId(id.to_string()))
}

/// A fragment with its trace given by point ids.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FragmentFile {
    pub domain: Vec<f64>,
    pub trace: Vec<String>,
}

impl FragmentFile {
    pub fn from_fragment(space: &FiniteMetricSpace, frag: &Fragment) -> Self {
        FragmentFile {
            domain: frag.domain().to_vec(),
            trace: frag.trace().iter().map(|&p| space.id(p).to_string()).collect(),
        }
    }

    pub fn to_fragment(&self, space: &FiniteMetricSpace) -> Result<Fragment, IoError> {
        let trace = self.trace.iter().map(|id| lookup(space, id)).collect::<Result<_, _>>()?;
        Ok(Fragment::new(self.domain.clone(), trace)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepFile {
    pub fragments: Vec<FragmentFile>,
    pub probs: Vec<f64>,
    pub densities: Vec<Vec<f64>>,
}

impl RepFile {
    pub fn from_rep(space: &FiniteMetricSpace, rep: &AlbertiRep) -> Self {
        RepFile {
            fragments: rep.fragments.iter().map(|f| FragmentFile::from_fragment(space, f)).collect(),
            probs: rep.probs.clone(),
            densities: rep.densities.clone(),
        }
    }

    pub fn to_rep(&self, space: &FiniteMetricSpace) -> Result<AlbertiRep, IoError> {
        Ok(AlbertiRep {
            fragments: self.fragments.iter().map(|f| f.to_fragment(space)).collect::<Result<_, _>>()?,
            probs: self.probs.clone(),
            densities: self.densities.clone(),
        })
    }
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, IoError> {
    serde_json::from_str(&read(path)?).map_err(|source| IoError::Json { path: path.display().to_string(), source })
}

pub fn read_rep(path: &Path, space: &FiniteMetricSpace) -> Result<AlbertiRep, IoError> {
    read_json::<RepFile>(path)?.to_rep(space)
}

/// Fragment pool: a JSON array of fragment files.
pub fn read_fragments(path: &Path, space: &FiniteMetricSpace) -> Result<Vec<Fragment>, IoError> {
    read_json::<Vec<FragmentFile>>(path)?.iter().map(|f| f.to_fragment(space)).collect()
}

/// Function table CSV `id,f1..fq`; every point of the space must appear once.
pub fn read_function(path: &Path, space: &FiniteMetricSpace) -> Result<VectorField, IoError> {
    let text = read(path)?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|source| IoError::Csv { path: path.display().to_string(), source })?.clone();
    let dim = header.len().saturating_sub(1);
    if dim == 0 || &header[0] != "id" {
        return Err(format_err(path, "expected header id,f1..fq"));
    }
    let mut rows: Vec<Option<Vec<f64>>> = vec![None; space.len()];
    for rec in rdr.records() {
        let rec = rec.map_err(|source| IoError::Csv { path: path.display().to_string(), source })?;
        let i = lookup(space, &rec[0])?;
        let vals: Result<Vec<f64>, _> = rec.iter().skip(1).map(str::parse::<f64>).collect();
        rows[i] = Some(vals.map_err(|e| format_err(path, format!("id {}: {e}", &rec[0])))?);
    }
    let rows: Vec<Vec<f64>> = rows
        .into_iter()
        .enumerate()
        .map(|(i, r)| r.ok_or_else(|| format_err(path, format!("no value for {}", space.id(i)))))
        .collect::<Result<_, _>>()?;
    Ok(VectorField::from_rows(&rows)?)
}

/// Point ids: a JSON array of strings or one id per line.
pub fn read_ids(path: &Path, space: &FiniteMetricSpace) -> Result<Vec<usize>, IoError> {
    let text = read(path)?;
    let ids: Vec<String> = if is_json(path) {
        serde_json::from_str(&text).map_err(|source| IoError::Json { path: path.display().to_string(), source })?
    } else {
        text.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect()
    };
    ids.iter().map(|id| lookup(space, id)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alberti::grid_line_rep;
    use crate::space::grid;

    #[test]
    fn space_round_trips_through_json_and_csv() {
        let dir = tempfile::tempdir().unwrap();
        let g = grid(2, 3, Metric::Euclidean).unwrap();
        let p = dir.path().join("g.json");
        fs::write(&p, serde_json::to_string(&space_json(&g)).unwrap()).unwrap();
        assert_eq!(read_space(&p, Metric::Euclidean, 1e-9).unwrap(), g);

        let c = dir.path().join("g.csv");
        let mut text = String::from("id,x1,x2,weight\n");
        for i in 0..g.len() {
            let x = g.coords(i).unwrap();
            text += &format!("{},{},{},{}\n", g.id(i), x[0], x[1], g.weight(i));
        }
        fs::write(&c, text).unwrap();
        let back = read_space(&c, Metric::Euclidean, 1e-9).unwrap();
        assert_eq!(back.len(), 9);
        assert!((back.dist(0, 8) - g.dist(0, 8)).abs() < 1e-15);

        let m = dir.path().join("m.csv");
        fs::write(&m, "0,1,2\n1,0,1\n2,1,0\n").unwrap();
        assert_eq!(read_matrix_space(&m, None, 1e-9).unwrap().dist(0, 2), 2.0);
        fs::write(&m, "0,1,5\n1,0,1\n5,1,0\n").unwrap();
        assert!(matches!(read_matrix_space(&m, None, 1e-9), Err(IoError::Space(SpaceError::Triangle { .. }))));
    }

    #[test]
    fn rep_and_function_files() {
        let dir = tempfile::tempdir().unwrap();
        let g = grid(2, 3, Metric::Euclidean).unwrap();
        let rep = grid_line_rep(&g, 3, 1).unwrap();
        let p = dir.path().join("rep.json");
        fs::write(&p, serde_json::to_string(&RepFile::from_rep(&g, &rep)).unwrap()).unwrap();
        assert_eq!(read_rep(&p, &g).unwrap(), rep);

        let f = dir.path().join("f.csv");
        let mut text = String::from("id,f1\n");
        for i in (0..g.len()).rev() {
            text += &format!("{},{}\n", g.id(i), i);
        }
        fs::write(&f, &text).unwrap();
        assert_eq!(read_function(&f, &g).unwrap().component(0), (0..9).map(|i| i as f64).collect::<Vec<_>>());
        fs::write(&f, "id,f1\nnope,1\n").unwrap();
        assert!(matches!(read_function(&f, &g), Err(IoError::UnknownId(_))));

        let ids = dir.path().join("s.txt");
        fs::write(&ids, format!("{}\n{}\n", g.id(4), g.id(0))).unwrap();
        assert_eq!(read_ids(&ids, &g).unwrap(), vec![4, 0]);
    }
}
