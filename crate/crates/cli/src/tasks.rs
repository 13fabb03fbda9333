//! Task execution. Each task yields a verdict, named residuals, details and
//! witness matrices; core errors become an `error` verdict.

use std::collections::BTreeMap;

use moritakit::bimodule::{left_basis, linking};
use moritakit::cpmap::{check_triple, linking_cp, minimal_stinespring, sme_cpmaps, verify_cp};
use moritakit::expectation::{rel10_converse, rel_pipeline, verify_sme_expectations};
use moritakit::numerics::{CMatrix, Tolerance};
use moritakit::representation::{
    bgr_transport, induce, linking_rep, multiplicities, sme_representations, verify_bimodule_rep,
};
use moritakit::transfer::{roundtrip, transfer_cp};
use moritakit::Error;
use serde::Serialize;
use serde_json::{json, Value};

use crate::scene::{Object, Scene, TaskSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Error,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub verdict: Verdict,
    pub residuals: BTreeMap<String, f64>,
    pub details: BTreeMap<String, Value>,
    pub matrices: Vec<(String, CMatrix)>,
    pub error: Option<String>,
}

impl Outcome {
    fn new() -> Self {
        Outcome {
            verdict: Verdict::Pass,
            residuals: BTreeMap::new(),
            details: BTreeMap::new(),
            matrices: Vec::new(),
            error: None,
        }
    }

    fn residual(&mut self, name: &str, value: f64) -> &mut Self {
        self.residuals.insert(name.into(), value);
        self
    }

    fn detail(&mut self, name: &str, value: impl Serialize) -> &mut Self {
        self.details.insert(name.into(), json!(value));
        self
    }

    fn require(&mut self, ok: bool) -> &mut Self {
        if !ok {
            self.verdict = Verdict::Fail;
        }
        self
    }

    fn failed_with(e: Error) -> Self {
        let mut o = Outcome::new();
        match e {
            Error::StageFailure { stage, residual } => {
                o.verdict = Verdict::Fail;
                o.residual(stage, residual).detail("failed_stage", stage);
            }
            other => {
                o.verdict = Verdict::Error;
                o.error = Some(other.to_string());
            }
        }
        o
    }
}

pub struct Context<'a> {
    pub scene: &'a Scene,
    pub tol: Tolerance,
}

/// Verdict limit for residuals of identities that hold exactly in exact
/// arithmetic.
fn limit(tol: &Tolerance) -> f64 {
    tol.bound(1.0)
}

pub fn label(task: &TaskSpec) -> String {
    match task {
        TaskSpec::Check { target } => target.clone(),
        TaskSpec::Dilate { map } => map.clone(),
        TaskSpec::Induce { bimodule, rep } => format!("{rep} along {bimodule}"),
        TaskSpec::Sme { bimodule, left, right } | TaskSpec::Linking { bimodule, left, right } => {
            format!("{left} ~ {right} over {bimodule}")
        }
        TaskSpec::Transfer { map, bimodule, frame } => match frame {
            Some(f) => format!("{map} along {bimodule} with {f}"),
            None => format!("{map} along {bimodule}"),
        },
        TaskSpec::Roundtrip { map, bimodule } => format!("{map} along {bimodule} and back"),
        TaskSpec::Rel7 { pair, rep } | TaskSpec::Rel10 { pair, rep } => format!("{pair} with {rep}"),
    }
}

pub fn run_task(ctx: &Context, task: &TaskSpec, seed: u64) -> Outcome {
    match execute(ctx, task, seed) {
        Ok(o) => o,
        Err(e) => Outcome::failed_with(e),
    }
}

fn mismatch(name: &str, expected: &str) -> Error {
    Error::StructureInvalid(format!("'{name}' is not a {expected}"))
}

macro_rules! fetch {
    ($ctx:expr, $name:expr, $variant:ident, $kind:expr) => {
        match $ctx.scene.get($name) {
            Some(Object::$variant(v)) => v,
            _ => return Err(mismatch($name, $kind)),
        }
    };
}

fn execute(ctx: &Context, task: &TaskSpec, seed: u64) -> moritakit::Result<Outcome> {
    let tol = &ctx.tol;
    let bound = limit(tol);
    let mut o = Outcome::new();
    match task {
        TaskSpec::Check { target } => check_object(ctx, target, &mut o)?,
        TaskSpec::Dilate { map } => {
            let phi = fetch!(ctx, map, CpMap, "cpmap");
            let t = minimal_stinespring(phi, tol)?;
            let r = check_triple(phi, &t);
            o.residual("dilation", r.dilation)
                .residual("norm_gap", r.norm_gap)
                .detail("dilation_dim", r.dilation_dim)
                .detail("cyclic_rank", r.cyclic_rank)
                .require(r.pass(phi.norm(), tol));
            o.matrices.push(("V".into(), t.v));
        }
        TaskSpec::Induce { bimodule, rep } => {
            let x = fetch!(ctx, bimodule, Bimodule, "bimodule");
            let pi_b = fetch!(ctx, rep, Representation, "representation");
            let ind = induce(x, pi_b, tol)?;
            let v = verify_bimodule_rep(&ind.rep, tol)?;
            o.residual("left_inner", v.left_inner)
                .residual("right_inner", v.right_inner)
                .residual("left_action", v.left_action)
                .residual("right_action", v.right_action)
                .detail("space_dim", ind.rep.pi_a.space_dim())
                .detail("multiplicities", multiplicities(&ind.rep.pi_a)?)
                .require(v.pass);
        }
        TaskSpec::Sme { bimodule, left, right } => {
            let x = fetch!(ctx, bimodule, Bimodule, "bimodule");
            let witness = match (ctx.scene.get(left), ctx.scene.get(right)) {
                (Some(Object::Representation(pa)), Some(Object::Representation(pb))) => {
                    sme_representations(pa, pb, x, tol)?
                }
                (Some(Object::CpMap(phi)), Some(Object::CpMap(psi))) => {
                    let w = sme_cpmaps(phi, psi, x, tol)?;
                    if let Some(w) = &w {
                        o.detail("left_dilation_dim", w.phi_triple.dilation_dim())
                            .detail("right_dilation_dim", w.psi_triple.dilation_dim());
                    }
                    w.map(|w| w.rep)
                }
                _ => return Err(mismatch(&format!("{left}/{right}"), "pair of representations or CP maps")),
            };
            o.detail("witness", witness.is_some()).require(witness.is_some());
            if let Some(w) = witness {
                let v = verify_bimodule_rep(&w, tol)?;
                o.residual("witness", v.max_residual()).require(v.pass);
                for (i, m) in w.images.into_iter().enumerate() {
                    o.matrices.push((format!("pi_X[{i}]"), m));
                }
            }
        }
        TaskSpec::Linking { bimodule, left, right } => {
            let x = fetch!(ctx, bimodule, Bimodule, "bimodule");
            let l = linking(x)?;
            o.detail("linking_dim", l.algebra.dim());
            match (ctx.scene.get(left), ctx.scene.get(right)) {
                (Some(Object::Representation(pa)), Some(Object::Representation(pb))) => {
                    let Some(w) = sme_representations(pa, pb, x, tol)? else {
                        o.detail("witness", false).require(false);
                        return Ok(o);
                    };
                    let lr = linking_rep(&w, &l)?;
                    let r = lr.rho.report();
                    o.residual("unital", r.unital)
                        .residual("star", r.star)
                        .residual("multiplicative", r.multiplicative)
                        .require(r.unital.max(r.star).max(r.multiplicative) <= bound);
                    let bgr = bgr_transport(&l, &lr.rho, seed, tol)?;
                    o.detail("block_ranks", &bgr.block_ranks).detail("transport_feasible", bgr.feasible());
                    if let Some(t) = bgr.transport {
                        o.residual("transport", t.residual).require(t.residual <= bound);
                        o.matrices.push(("w_tilde".into(), t.w_tilde));
                    }
                }
                (Some(Object::CpMap(phi)), Some(Object::CpMap(psi))) => {
                    let Some(w) = sme_cpmaps(phi, psi, x, tol)? else {
                        o.detail("witness", false).require(false);
                        return Ok(o);
                    };
                    let lc = linking_cp(phi, psi, &w, &l, tol)?;
                    o.residual("dilation", lc.report.dilation)
                        .residual("left_compression", lc.left_compression)
                        .residual("right_compression", lc.right_compression)
                        .residual("choi_min_eigenvalue", lc.choi.min_eigenvalue)
                        .require(lc.report.pass(lc.tau.norm(), tol))
                        .require(lc.left_compression.max(lc.right_compression) <= bound)
                        .require(lc.choi.cp);
                    o.matrices.push(("V".into(), lc.triple.v));
                }
                _ => return Err(mismatch(&format!("{left}/{right}"), "pair of representations or CP maps")),
            }
        }
        TaskSpec::Transfer { map, bimodule, frame } => {
            let psi = fetch!(ctx, map, CpMap, "cpmap");
            let x = fetch!(ctx, bimodule, Bimodule, "bimodule");
            let frame = match frame {
                Some(f) => match ctx.scene.get(f) {
                    Some(Object::Frame(fr, _)) => fr.clone(),
                    _ => return Err(mismatch(f, "frame")),
                },
                None => left_basis(x, tol)?,
            };
            let t = transfer_cp(psi, x, &frame, tol)?;
            o.residual("choi_min_eigenvalue", t.choi.min_eigenvalue)
                .residual("isometry", t.isometry)
                .residual("intertwining", t.intertwining)
                .detail("frame_len", frame.len())
                .detail("target_dim", t.phi.target_dim())
                .detail("dilation_dim", t.phi_triple.dilation_dim())
                .detail("witness", t.witness.is_some())
                .require(t.choi.cp && t.isometry <= bound && t.intertwining <= bound && t.witness.is_some());
            o.matrices.push(("U".into(), t.u_iso));
        }
        TaskSpec::Roundtrip { map, bimodule } => {
            let psi = fetch!(ctx, map, CpMap, "cpmap");
            let x = fetch!(ctx, bimodule, Bimodule, "bimodule");
            let rt = roundtrip(psi, x, tol)?;
            o.residual("forward_intertwining", rt.forward.intertwining)
                .residual("backward_intertwining", rt.backward.intertwining)
                .detail("returned_target_dim", rt.backward.phi.target_dim())
                .detail("witness", rt.witness.is_some())
                .require(rt.witness.is_some());
        }
        TaskSpec::Rel7 { pair, rep } => {
            let p = fetch!(ctx, pair, ExpectationPair, "expectation_pair");
            let pi_b = fetch!(ctx, rep, Representation, "representation");
            let run = rel_pipeline(p, pi_b, tol)?;
            for s in &run.stages {
                o.residual(s.stage, s.residual);
            }
            o.detail("dilation_dim", run.triple_c.dilation_dim())
                .detail("cyclic_rank", run.cyclic_rank)
                .detail("independent_witness", run.independent_witness)
                .detail("note", UNCHECKED_CONDITIONS);
            o.matrices.push(("U".into(), run.u));
        }
        TaskSpec::Rel10 { pair, rep } => {
            let p = fetch!(ctx, pair, ExpectationPair, "expectation_pair");
            let pi_b = fetch!(ctx, rep, Representation, "representation");
            let v = rel10_converse(p, pi_b, tol)?;
            o.residual("isometry", v.isometry)
                .residual("compression", v.compression)
                .residual("bimodule", v.bimodule)
                .detail("note", UNCHECKED_CONDITIONS)
                .require(v.holds());
        }
    }
    Ok(o)
}

const UNCHECKED_CONDITIONS: &str =
    "only X in Y, C.X spanning Y and E^B fixing the B-valued inner products on X are enforced";

fn check_object(ctx: &Context, name: &str, o: &mut Outcome) -> moritakit::Result<()> {
    let tol = &ctx.tol;
    let Some(obj) = ctx.scene.get(name) else {
        return Err(mismatch(name, "known object"));
    };
    o.detail("kind", obj.kind());
    match obj {
        Object::Algebra(a) => {
            let s = a.structure()?;
            o.detail("dim", a.dim()).detail("block_sizes", s.sizes()).detail("block_multiplicities", s.multiplicities());
        }
        Object::Bimodule(x) => {
            o.detail("dim", x.dim()).detail("rows", x.rows()).detail("cols", x.cols());
        }
        Object::Representation(r) => {
            let rep = r.report();
            o.residual("unital", rep.unital)
                .residual("star", rep.star)
                .residual("multiplicative", rep.multiplicative)
                .detail("multiplicities", multiplicities(r)?);
        }
        Object::BimoduleRep(b) => {
            let v = verify_bimodule_rep(b, tol)?;
            o.residual("left_inner", v.left_inner)
                .residual("right_inner", v.right_inner)
                .residual("left_action", v.left_action)
                .residual("right_action", v.right_action)
                .require(v.pass);
        }
        Object::CpMap(phi) => {
            let c = verify_cp(phi, tol)?;
            o.residual("choi_min_eigenvalue", c.min_eigenvalue).require(c.cp);
        }
        Object::Frame(f, x) => {
            let r = f.reconstruction_residual(x);
            o.residual("reconstruction", r).detail("len", f.len()).require(r <= limit(tol));
        }
        Object::ExpectationPair(p) => {
            let v = verify_sme_expectations(p, tol);
            o.residual("bimodule_identity", v.residual).require(v.pass);
        }
    }
    Ok(())
}
