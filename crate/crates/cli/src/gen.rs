//! Random scene generation.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use moritakit::bimodule::Bimodule;
use moritakit::cpmap::CPMap;
use moritakit::generate::{self, TensorPairParts};
use moritakit::representation::Representation;
use moritakit::Algebra;

use crate::scene::{matrix_to_json, ObjectSpec, SceneFile, TaskSpec};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GenKind {
    Algebra,
    Bimodule,
    Cpmap,
    ExpectationPair,
    Co5Instance,
    Rel7Instance,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    pub kind: GenKind,
    /// Blocks as "n:mu,..." for algebras and "n:m:mu,..." for bimodules.
    #[arg(long)]
    pub blocks: Option<String>,
    #[arg(long, default_value_t = 2)]
    pub target_dim: usize,
    #[arg(long, default_value_t = 2)]
    pub kraus_rank: usize,
    #[arg(long, default_value_t = 2)]
    pub tensor_factor: usize,
    /// Use different slice weights on the two sides.
    #[arg(long)]
    pub incompatible: bool,
    #[arg(long, default_value_t = 4)]
    pub max_ambient: usize,
    /// Keep the blocks in standard position.
    #[arg(long)]
    pub no_conjugate: bool,
    /// Write the scene here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_blocks<const K: usize>(text: Option<&str>, default: &str) -> Result<Vec<[usize; K]>, CliError> {
    let text = text.unwrap_or(default);
    text.split(',')
        .map(|b| {
            let parts: Vec<usize> = b
                .trim()
                .split(':')
                .map(|p| p.parse::<usize>().map_err(|_| CliError::Param(format!("bad block '{b}'"))))
                .collect::<Result<_, _>>()?;
            <[usize; K]>::try_from(parts)
                .map_err(|_| CliError::Param(format!("block '{b}' needs {K} fields separated by ':'")))
        })
        .collect()
}

fn param(e: moritakit::Error) -> CliError {
    CliError::Param(e.to_string())
}

#[derive(Default)]
struct Builder {
    file: SceneFile,
}

impl Builder {
    fn algebra(&mut self, name: &str, a: &Algebra) {
        self.file.objects.push(ObjectSpec::Algebra {
            name: name.into(),
            ambient_dim: a.ambient_dim(),
            basis: a.basis().iter().map(matrix_to_json).collect(),
        });
    }

    /// Declares the bimodule and both its algebras as `<name>_left` and `<name>_right`.
    fn bimodule(&mut self, name: &str, x: &Bimodule) -> (String, String) {
        let (l, r) = (format!("{name}_left"), format!("{name}_right"));
        self.algebra(&l, x.left());
        self.algebra(&r, x.right());
        self.file.objects.push(ObjectSpec::Bimodule {
            name: name.into(),
            left: l.clone(),
            right: r.clone(),
            rows: x.rows(),
            cols: x.cols(),
            basis: x.basis().iter().map(matrix_to_json).collect(),
        });
        (l, r)
    }

    fn representation(&mut self, name: &str, algebra: &str, pi: &Representation) {
        self.file.objects.push(ObjectSpec::Representation {
            name: name.into(),
            algebra: algebra.into(),
            space_dim: pi.space_dim(),
            images: pi.images().iter().map(matrix_to_json).collect(),
        });
    }

    fn cpmap(&mut self, name: &str, algebra: &str, phi: &CPMap) {
        self.file.objects.push(ObjectSpec::Cpmap {
            name: name.into(),
            algebra: algebra.into(),
            target_dim: phi.target_dim(),
            images: Some(phi.images().iter().map(matrix_to_json).collect()),
            kraus: None,
        });
    }

    fn pair(&mut self, name: &str, bimodule: &str, parts: &TensorPairParts) {
        self.file.objects.push(ObjectSpec::ExpectationPair {
            name: name.into(),
            bimodule: bimodule.into(),
            tensor_factor: parts.tensor_factor,
            rho_a: matrix_to_json(&parts.rho_a),
            rho_b: matrix_to_json(&parts.rho_b),
        });
    }

    fn task(&mut self, t: TaskSpec) {
        self.file.tasks.push(t);
    }

    fn check(&mut self, target: &str) {
        self.task(TaskSpec::Check { target: target.into() });
    }
}

/// Declares `X_0`, the pair, its right algebra `B` and a representation
/// `piB`, with rel7/rel10 tasks on the pair.
fn pair_scene(
    g: &mut Builder,
    parts: &TensorPairParts,
    pi_b: &Representation,
) -> Result<(), CliError> {
    g.bimodule("X0", &parts.x0);
    g.pair("pair", "X0", parts);
    let pair = parts.build(&Default::default()).map_err(param)?;
    g.algebra("B", pair.x_sub.right());
    g.representation("piB", "B", pi_b);
    g.check("pair");
    g.task(TaskSpec::Rel7 { pair: "pair".into(), rep: "piB".into() });
    g.task(TaskSpec::Rel10 { pair: "pair".into(), rep: "piB".into() });
    Ok(())
}

pub fn generate(args: &GenArgs, seed: u64) -> Result<SceneFile, CliError> {
    let conjugate = !args.no_conjugate;
    let mut g = Builder::default();
    match args.kind {
        GenKind::Algebra => {
            let blocks: Vec<_> =
                parse_blocks::<2>(args.blocks.as_deref(), "2:1,1:1")?.into_iter().map(|[n, mu]| (n, mu)).collect();
            let a = generate::algebra(&blocks, conjugate, seed).map_err(param)?;
            g.algebra("A", &a);
            g.check("A");
        }
        GenKind::Bimodule => {
            let x = generate::bimodule(&triples(args, "2:1:1")?, conjugate, seed).map_err(param)?;
            g.bimodule("X", &x);
            g.check("X");
        }
        GenKind::Cpmap => {
            let blocks: Vec<_> =
                parse_blocks::<2>(args.blocks.as_deref(), "2:1,1:1")?.into_iter().map(|[n, mu]| (n, mu)).collect();
            let a = generate::algebra(&blocks, conjugate, seed).map_err(param)?;
            let phi = generate::cpmap(&a, args.target_dim, args.kraus_rank, seed ^ 1).map_err(param)?;
            g.algebra("A", &a);
            g.cpmap("phi", "A", &phi);
            g.check("phi");
            g.task(TaskSpec::Dilate { map: "phi".into() });
        }
        GenKind::ExpectationPair => {
            let parts = generate::tensor_pair_parts(&triples(args, "1:1:1")?, args.tensor_factor, !args.incompatible, seed)
                .map_err(param)?;
            let b = parts.build(&Default::default()).map_err(param)?.x_sub.right().clone();
            let ones = vec![1; b.structure().map_err(param)?.blocks.len()];
            let pi_b = generate::representation(&b, &ones, seed ^ 2).map_err(param)?;
            pair_scene(&mut g, &parts, &pi_b)?;
        }
        GenKind::Co5Instance => {
            let inst = generate::co5_instance(args.max_ambient, seed).map_err(param)?;
            let (_, right) = g.bimodule("X", &inst.x);
            g.cpmap("psi", &right, &inst.psi);
            g.task(TaskSpec::Transfer { map: "psi".into(), bimodule: "X".into(), frame: None });
            g.task(TaskSpec::Roundtrip { map: "psi".into(), bimodule: "X".into() });
        }
        GenKind::Rel7Instance => {
            let inst = generate::rel7_instance(args.max_ambient, seed).map_err(param)?;
            pair_scene(&mut g, &inst.parts, &inst.pi_b)?;
            g.pair("pair_incompatible", "X0", &inst.incompatible_parts);
        }
    }
    Ok(g.file)
}

fn triples(args: &GenArgs, default: &str) -> Result<Vec<(usize, usize, usize)>, CliError> {
    Ok(parse_blocks::<3>(args.blocks.as_deref(), default)?.into_iter().map(|[n, m, mu]| (n, m, mu)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_lists_parse() {
        assert_eq!(parse_blocks::<2>(Some("2:1, 1:3"), "").unwrap(), vec![[2, 1], [1, 3]]);
        assert!(parse_blocks::<3>(Some("2:1"), "").is_err());
        assert!(parse_blocks::<2>(Some("a:1"), "").is_err());
    }
}
