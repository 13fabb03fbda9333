//! Scene files: named objects plus a task list, stored as JSON.

use std::collections::HashMap;
use std::path::Path;

use moritakit::bimodule::{verify_bimodule, Bimodule, Frame};
use moritakit::cpmap::CPMap;
use moritakit::expectation::ExpectationPair;
use moritakit::numerics::{pinv, rank, CMatrix, Tolerance, C64};
use moritakit::representation::{check_representation, BimoduleRep, Representation};
use moritakit::{validate_algebra, Algebra, UnitPolicy};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// A complex scalar `[re, im]`; a bare number is read as a real scalar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Complex([f64; 2]),
    Real(f64),
}

/// Row-major nested arrays.
pub type MatrixJson = Vec<Vec<Scalar>>;

pub fn matrix_to_json(m: &CMatrix) -> MatrixJson {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| Scalar::Complex([m[(i, j)].re, m[(i, j)].im])).collect())
        .collect()
}

fn matrix_from_json(m: &MatrixJson, what: &str) -> Result<CMatrix, String> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    if m.iter().any(|r| r.len() != cols) {
        return Err(format!("{what}: rows have different lengths"));
    }
    Ok(CMatrix::from_fn(rows, cols, |i, j| match m[i][j] {
        Scalar::Complex([re, im]) => C64::new(re, im),
        Scalar::Real(re) => C64::new(re, 0.0),
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectSpec {
    /// The *-algebra generated by `basis` and the identity. Images of maps on
    /// this algebra are listed against `basis`, which must then be a linear
    /// basis.
    Algebra { name: String, ambient_dim: usize, basis: Vec<MatrixJson> },
    Bimodule { name: String, left: String, right: String, rows: usize, cols: usize, basis: Vec<MatrixJson> },
    Representation { name: String, algebra: String, space_dim: usize, images: Vec<MatrixJson> },
    /// `action` lists `π_X` on the bimodule's `basis`.
    BimoduleRep { name: String, bimodule: String, left_rep: String, right_rep: String, action: Vec<MatrixJson> },
    /// Either `images` on the algebra's basis or Kraus operators `K_i`
    /// (ambient × target) for `a ↦ Σ K_i* a K_i`.
    Cpmap {
        name: String,
        algebra: String,
        target_dim: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        images: Option<Vec<MatrixJson>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        kraus: Option<Vec<MatrixJson>>,
    },
    Frame { name: String, bimodule: String, vectors: Vec<MatrixJson> },
    /// Tensor-type pair over `bimodule` with slice weights `rho_a`, `rho_b`.
    ExpectationPair { name: String, bimodule: String, tensor_factor: usize, rho_a: MatrixJson, rho_b: MatrixJson },
}

impl ObjectSpec {
    pub fn name(&self) -> &str {
        match self {
            ObjectSpec::Algebra { name, .. }
            | ObjectSpec::Bimodule { name, .. }
            | ObjectSpec::Representation { name, .. }
            | ObjectSpec::BimoduleRep { name, .. }
            | ObjectSpec::Cpmap { name, .. }
            | ObjectSpec::Frame { name, .. }
            | ObjectSpec::ExpectationPair { name, .. } => name,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case", deny_unknown_fields)]
pub enum TaskSpec {
    Check { target: String },
    Dilate { map: String },
    Induce { bimodule: String, rep: String },
    /// `left`/`right` name two representations or two CP maps.
    Sme { bimodule: String, left: String, right: String },
    Linking { bimodule: String, left: String, right: String },
    Transfer {
        map: String,
        bimodule: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        frame: Option<String>,
    },
    Roundtrip { map: String, bimodule: String },
    Rel7 { pair: String, rep: String },
    Rel10 { pair: String, rep: String },
}

impl TaskSpec {
    pub fn command(&self) -> &'static str {
        match self {
            TaskSpec::Check { .. } => "check",
            TaskSpec::Dilate { .. } => "dilate",
            TaskSpec::Induce { .. } => "induce",
            TaskSpec::Sme { .. } => "sme",
            TaskSpec::Linking { .. } => "linking",
            TaskSpec::Transfer { .. } => "transfer",
            TaskSpec::Roundtrip { .. } => "roundtrip",
            TaskSpec::Rel7 { .. } => "rel7",
            TaskSpec::Rel10 { .. } => "rel10",
        }
    }

    fn references(&self) -> Vec<&str> {
        match self {
            TaskSpec::Check { target } => vec![target],
            TaskSpec::Dilate { map } => vec![map],
            TaskSpec::Induce { bimodule, rep } => vec![bimodule, rep],
            TaskSpec::Sme { bimodule, left, right } | TaskSpec::Linking { bimodule, left, right } => {
                vec![bimodule, left, right]
            }
            TaskSpec::Transfer { map, bimodule, frame } => {
                let mut v = vec![map.as_str(), bimodule.as_str()];
                if let Some(f) = frame {
                    v.push(f);
                }
                v
            }
            TaskSpec::Roundtrip { map, bimodule } => vec![map, bimodule],
            TaskSpec::Rel7 { pair, rep } | TaskSpec::Rel10 { pair, rep } => vec![pair, rep],
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    #[serde(default)]
    pub objects: Vec<ObjectSpec>,
    #[serde(default)]
    pub tasks: Vec<TaskSpec>,
}

#[derive(Debug, Clone)]
pub enum Object {
    Algebra(Algebra),
    Bimodule(Bimodule),
    Representation(Representation),
    BimoduleRep(BimoduleRep),
    CpMap(CPMap),
    /// A frame together with the bimodule it was declared for.
    Frame(Frame, Bimodule),
    ExpectationPair(ExpectationPair),
}

impl Object {
    pub fn kind(&self) -> &'static str {
        match self {
            Object::Algebra(_) => "algebra",
            Object::Bimodule(_) => "bimodule",
            Object::Representation(_) => "representation",
            Object::BimoduleRep(_) => "bimodule_rep",
            Object::CpMap(_) => "cpmap",
            Object::Frame(..) => "frame",
            Object::ExpectationPair(_) => "expectation_pair",
        }
    }
}

/// A validated scene. `file` is kept for saving.
#[derive(Debug, Clone)]
pub struct Scene {
    pub file: SceneFile,
    pub order: Vec<String>,
    objects: HashMap<String, Object>,
    /// The basis list each algebra or bimodule was declared with.
    declared: HashMap<String, Vec<CMatrix>>,
}

impl Scene {
    pub fn get(&self, name: &str) -> Option<&Object> {
        self.objects.get(name)
    }

    pub fn objects(&self) -> impl Iterator<Item = (&str, &Object)> {
        self.order.iter().map(|n| (n.as_str(), &self.objects[n]))
    }
}

fn invalid(name: &str, reason: impl std::fmt::Display) -> CliError {
    CliError::Validation { name: name.to_string(), reason: reason.to_string() }
}

pub fn load_scene(path: &Path, tol: &Tolerance) -> Result<Scene, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))?;
    let file: SceneFile =
        serde_json::from_str(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    resolve(file, tol)
}

pub fn save_scene(file: &SceneFile) -> String {
    let mut s = serde_json::to_string_pretty(file).expect("scene files serialize");
    s.push('\n');
    s
}

fn matrices(list: &[MatrixJson], name: &str, field: &str) -> Result<Vec<CMatrix>, CliError> {
    list.iter()
        .enumerate()
        .map(|(i, m)| matrix_from_json(m, &format!("{field}[{i}]")).map_err(|e| invalid(name, e)))
        .collect()
}

fn check_shape(m: &CMatrix, rows: usize, cols: usize, name: &str, what: &str) -> Result<(), CliError> {
    if m.shape() != (rows, cols) {
        return Err(invalid(name, format!("{what} has shape {:?}, expected ({rows}, {cols})", m.shape())));
    }
    Ok(())
}

/// Rewrite images listed against `declared` as images on the basis whose
/// coordinates `coords` computes.
fn reindex(
    name: &str,
    dim: usize,
    declared: &[CMatrix],
    images: &[CMatrix],
    coords: impl Fn(&CMatrix) -> DVector<C64>,
) -> Result<Vec<CMatrix>, CliError> {
    if images.len() != declared.len() {
        return Err(invalid(name, format!("{} images for {} declared basis elements", images.len(), declared.len())));
    }
    let mut m = CMatrix::zeros(dim, declared.len());
    for (j, d) in declared.iter().enumerate() {
        m.set_column(j, &coords(d));
    }
    let rank_tol = Tolerance { rel: 1e-8, abs: 1e-12 };
    if declared.len() != dim || rank(&m, &rank_tol) != dim {
        return Err(invalid(name, "images must be listed against a linear basis of the underlying space"));
    }
    let solve = pinv(&m, &rank_tol);
    let (r, c) = images[0].shape();
    Ok((0..dim)
        .map(|i| {
            (0..declared.len()).fold(CMatrix::zeros(r, c), |acc, j| acc + &images[j] * solve[(j, i)])
        })
        .collect())
}

fn resolve(file: SceneFile, tol: &Tolerance) -> Result<Scene, CliError> {
    let mut scene = Scene { file: SceneFile::default(), order: Vec::new(), objects: HashMap::new(), declared: HashMap::new() };
    for spec in &file.objects {
        let name = spec.name();
        if scene.objects.contains_key(name) {
            return Err(invalid(name, "duplicate object name"));
        }
        let lookup = |r: &str, kind: &str| -> Result<&Object, CliError> {
            match scene.objects.get(r) {
                Some(o) if o.kind() == kind => Ok(o),
                Some(o) => Err(invalid(name, format!("'{r}' is a {}, expected a {kind}", o.kind()))),
                None => Err(invalid(name, format!("references unknown {kind} '{r}'"))),
            }
        };
        let (object, declared) = match spec {
            ObjectSpec::Algebra { ambient_dim, basis, .. } => {
                let gens = matrices(basis, name, "basis")?;
                for (i, g) in gens.iter().enumerate() {
                    check_shape(g, *ambient_dim, *ambient_dim, name, &format!("basis[{i}]"))?;
                }
                let a = validate_algebra(&gens, UnitPolicy::Append).map_err(|e| invalid(name, e))?;
                (Object::Algebra(a), Some(gens))
            }
            ObjectSpec::Bimodule { left, right, rows, cols, basis, .. } => {
                let Object::Algebra(a) = lookup(left, "algebra")? else { unreachable!() };
                let Object::Algebra(b) = lookup(right, "algebra")? else { unreachable!() };
                if (a.ambient_dim(), b.ambient_dim()) != (*rows, *cols) {
                    return Err(invalid(name, "rows/cols do not match the algebras' ambient dimensions"));
                }
                let vs = matrices(basis, name, "basis")?;
                for (i, v) in vs.iter().enumerate() {
                    check_shape(v, *rows, *cols, name, &format!("basis[{i}]"))?;
                }
                let x = verify_bimodule(a, b, &vs, tol).map_err(|e| invalid(name, e))?;
                (Object::Bimodule(x), Some(vs))
            }
            ObjectSpec::Representation { algebra, space_dim, images, .. } => {
                let Object::Algebra(a) = lookup(algebra, "algebra")? else { unreachable!() };
                let imgs = matrices(images, name, "images")?;
                for (i, m) in imgs.iter().enumerate() {
                    check_shape(m, *space_dim, *space_dim, name, &format!("images[{i}]"))?;
                }
                let imgs = reindex(name, a.dim(), &scene.declared[algebra], &imgs, |x| a.coords(x))?;
                let rep = Representation::new(a, *space_dim, imgs).map_err(|e| invalid(name, e))?;
                check_representation(&rep, tol).map_err(|e| invalid(name, e))?;
                (Object::Representation(rep), None)
            }
            ObjectSpec::BimoduleRep { bimodule, left_rep, right_rep, action, .. } => {
                let Object::Bimodule(x) = lookup(bimodule, "bimodule")? else { unreachable!() };
                let Object::Representation(pa) = lookup(left_rep, "representation")? else { unreachable!() };
                let Object::Representation(pb) = lookup(right_rep, "representation")? else { unreachable!() };
                if !pa.algebra().same_span(x.left()) || !pb.algebra().same_span(x.right()) {
                    return Err(invalid(name, "representations are not of the bimodule's algebras"));
                }
                let imgs = matrices(action, name, "action")?;
                for (i, m) in imgs.iter().enumerate() {
                    check_shape(m, pa.space_dim(), pb.space_dim(), name, &format!("action[{i}]"))?;
                }
                let images = reindex(name, x.dim(), &scene.declared[bimodule], &imgs, |v| x.coords(v))?;
                let b = BimoduleRep { pi_a: pa.clone(), pi_b: pb.clone(), module: x.clone(), images };
                (Object::BimoduleRep(b), None)
            }
            ObjectSpec::Cpmap { algebra, target_dim, images, kraus, .. } => {
                let Object::Algebra(a) = lookup(algebra, "algebra")? else { unreachable!() };
                let phi = match (images, kraus) {
                    (Some(images), None) => {
                        let imgs = matrices(images, name, "images")?;
                        for (i, m) in imgs.iter().enumerate() {
                            check_shape(m, *target_dim, *target_dim, name, &format!("images[{i}]"))?;
                        }
                        let imgs = reindex(name, a.dim(), &scene.declared[algebra], &imgs, |x| a.coords(x))?;
                        CPMap::new(a, *target_dim, imgs)
                    }
                    (None, Some(kraus)) => {
                        let ks = matrices(kraus, name, "kraus")?;
                        for (i, k) in ks.iter().enumerate() {
                            check_shape(k, a.ambient_dim(), *target_dim, name, &format!("kraus[{i}]"))?;
                        }
                        CPMap::from_kraus(a, &ks)
                    }
                    _ => return Err(invalid(name, "give exactly one of 'images' and 'kraus'")),
                };
                (Object::CpMap(phi.map_err(|e| invalid(name, e))?), None)
            }
            ObjectSpec::Frame { bimodule, vectors, .. } => {
                let Object::Bimodule(x) = lookup(bimodule, "bimodule")? else { unreachable!() };
                let vs = matrices(vectors, name, "vectors")?;
                if vs.is_empty() {
                    return Err(invalid(name, "a frame needs at least one vector"));
                }
                for (i, v) in vs.iter().enumerate() {
                    check_shape(v, x.rows(), x.cols(), name, &format!("vectors[{i}]"))?;
                    if x.residual(v) > tol.rel.max(1e-8) {
                        return Err(invalid(name, format!("vectors[{i}] is not in the bimodule")));
                    }
                }
                (Object::Frame(Frame { vectors: vs }, x.clone()), None)
            }
            ObjectSpec::ExpectationPair { bimodule, tensor_factor, rho_a, rho_b, .. } => {
                let Object::Bimodule(x) = lookup(bimodule, "bimodule")? else { unreachable!() };
                let ra = matrix_from_json(rho_a, "rho_a").map_err(|e| invalid(name, e))?;
                let rb = matrix_from_json(rho_b, "rho_b").map_err(|e| invalid(name, e))?;
                for (m, what) in [(&ra, "rho_a"), (&rb, "rho_b")] {
                    check_shape(m, *tensor_factor, *tensor_factor, name, what)?;
                }
                let pair = ExpectationPair::tensor(x, *tensor_factor, &ra, &rb, tol).map_err(|e| invalid(name, e))?;
                (Object::ExpectationPair(pair), None)
            }
        };
        scene.order.push(name.to_string());
        scene.objects.insert(name.to_string(), object);
        if let Some(d) = declared {
            scene.declared.insert(name.to_string(), d);
        }
    }
    for (i, task) in file.tasks.iter().enumerate() {
        for r in task.references() {
            if !scene.objects.contains_key(r) {
                return Err(invalid(&format!("task {i}"), format!("references unknown object '{r}'")));
            }
        }
    }
    scene.file = file;
    Ok(scene)
}
