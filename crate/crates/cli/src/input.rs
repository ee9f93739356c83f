use std::fs;
use std::path::Path;

use num_complex::Complex64;
use treeshift::multiplier::Symbol;
use treeshift::tree::{TreeSpec, TreeSpecKind};
use treeshift::weights::WeightSpec;
use treeshift::{DirectedTree, WeightedTree};

use crate::CliError;

/// Vertex count the default κ-ary depth stays under.
const DEFAULT_KARY_VERTICES: usize = 200_000;
const DEFAULT_DEPTH: usize = 60;

pub struct TreeOptions<'a> {
    pub tree: &'a str,
    pub weights: Option<&'a Path>,
    pub depth: Option<usize>,
    pub kappa: Option<usize>,
    pub capped: bool,
    pub budget: Option<usize>,
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn parse_json<T: serde::de::DeserializeOwned>(text: &str, what: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Io(format!("{what}: {e}")))
}

fn default_kary_depth(kappa: usize) -> usize {
    if kappa <= 1 {
        return DEFAULT_DEPTH;
    }
    let (mut depth, mut total, mut level) = (0, 1usize, 1usize);
    while depth < DEFAULT_DEPTH {
        level = level.saturating_mul(kappa);
        total = total.saturating_add(level);
        if total > DEFAULT_KARY_VERTICES {
            break;
        }
        depth += 1;
    }
    depth.max(1)
}

/// A built-in profile (`t20`, `kary`, `kary:κ`, `ray`) or a path to a tree
/// JSON file.
fn tree_spec(opts: &TreeOptions) -> Result<TreeSpec, CliError> {
    let builtin = match opts.tree {
        "t20" => Some(TreeSpec::t20(DEFAULT_DEPTH)),
        "ray" => Some(TreeSpec::kary(1, DEFAULT_DEPTH)),
        "kary" => Some(TreeSpec::kary(opts.kappa.unwrap_or(2), 0)),
        s if s.starts_with("kary:") => {
            let kappa = s[5..]
                .parse()
                .map_err(|_| CliError::Usage(format!("bad arity in {s:?}")))?;
            Some(TreeSpec::kary(kappa, 0))
        }
        _ => None,
    };
    let mut spec = match builtin {
        Some(spec) => spec,
        None => parse_json(&read(Path::new(opts.tree))?, opts.tree)?,
    };
    if spec.kind == TreeSpecKind::Kary {
        if let Some(k) = opts.kappa {
            spec.kappa = Some(k);
        }
        if spec.depth == 0 {
            spec.depth = default_kary_depth(spec.kappa.unwrap_or(2));
        }
        if opts.capped {
            spec.capped = Some(true);
        }
    } else if opts.kappa.is_some() || opts.capped {
        return Err(CliError::Usage(
            "--kappa and --capped apply to κ-ary trees only".into(),
        ));
    }
    if let Some(b) = opts.budget {
        spec.budget = Some(b);
    }
    if let Some(d) = opts.depth {
        spec.depth = d;
    }
    Ok(spec)
}

pub fn load_tree(opts: &TreeOptions) -> Result<WeightedTree, CliError> {
    let spec = tree_spec(opts)?;
    let tree = DirectedTree::from_spec(&spec)?;
    let weights = match opts.weights {
        Some(path) => parse_json::<WeightSpec>(&read(path)?, &path.display().to_string())?,
        None => WeightSpec::default_for(&tree),
    };
    let system = weights.build(&tree)?;
    Ok(WeightedTree::new(tree, system)?)
}

/// Inline JSON (starting with `{`) or a path to a symbol JSON file.
pub fn load_symbol(arg: &str) -> Result<Symbol, CliError> {
    if arg.trim_start().starts_with('{') {
        parse_json(arg, "--symbol")
    } else {
        parse_json(&read(Path::new(arg))?, arg)
    }
}

/// `re` or `re,im`.
pub fn parse_complex(s: &str) -> Result<Complex64, String> {
    let parse = |x: &str| {
        x.trim()
            .parse::<f64>()
            .map_err(|_| format!("not a number: {x:?}"))
    };
    let z = match s.split_once(',') {
        Some((re, im)) => Complex64::new(parse(re)?, parse(im)?),
        None => Complex64::new(parse(s)?, 0.0),
    };
    if z.re.is_finite() && z.im.is_finite() {
        Ok(z)
    } else {
        Err(format!("not finite: {s:?}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_arguments() {
        assert_eq!(parse_complex("0.5").unwrap(), Complex64::new(0.5, 0.0));
        assert_eq!(
            parse_complex("0.25, -1").unwrap(),
            Complex64::new(0.25, -1.0)
        );
        assert!(parse_complex("x").is_err());
        assert!(parse_complex("inf").is_err());
    }

    #[test]
    fn default_depths() {
        assert_eq!(default_kary_depth(1), 60);
        assert_eq!(default_kary_depth(2), 16);
        assert_eq!(default_kary_depth(3), 10);
        assert_eq!(default_kary_depth(4), 8);
    }
}
