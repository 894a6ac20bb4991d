//! Seeded graph generators. The same spec and seed always produce the same
//! graph; node identifiers equal node indices.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

use super::graph::{NodeIdx, SimGraph};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum GenSpec {
    RandomRegular { n: usize, d: usize },
    Gnp { n: usize, p: f64 },
    Grid { rows: usize, cols: usize },
    /// Random recursive tree: node `i` attaches to a uniform earlier node.
    Tree { n: usize },
    /// `h` layers of `w` nodes; every node below the top links to `k`
    /// distinct nodes of the next layer and to `s` random nodes of its own.
    Layered { h: usize, w: usize, k: usize, s: usize },
    Clique { n: usize },
    Cycle { n: usize },
    Path { n: usize },
    Star { leaves: usize },
}

impl GenSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            GenSpec::RandomRegular { .. } => "regular",
            GenSpec::Gnp { .. } => "gnp",
            GenSpec::Grid { .. } => "grid",
            GenSpec::Tree { .. } => "tree",
            GenSpec::Layered { .. } => "layered",
            GenSpec::Clique { .. } => "clique",
            GenSpec::Cycle { .. } => "cycle",
            GenSpec::Path { .. } => "path",
            GenSpec::Star { .. } => "star",
        }
    }
}

impl fmt::Display for GenSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GenSpec::RandomRegular { n, d } => write!(f, "regular:n={n},d={d}"),
            GenSpec::Gnp { n, p } => write!(f, "gnp:n={n},p={p}"),
            GenSpec::Grid { rows, cols } => write!(f, "grid:rows={rows},cols={cols}"),
            GenSpec::Tree { n } => write!(f, "tree:n={n}"),
            GenSpec::Layered { h, w, k, s } => write!(f, "layered:h={h},w={w},k={k},s={s}"),
            GenSpec::Clique { n } => write!(f, "clique:n={n}"),
            GenSpec::Cycle { n } => write!(f, "cycle:n={n}"),
            GenSpec::Path { n } => write!(f, "path:n={n}"),
            GenSpec::Star { leaves } => write!(f, "star:leaves={leaves}"),
        }
    }
}

impl FromStr for GenSpec {
    type Err = Error;

    /// Parses `kind:key=value,...`, e.g. `regular:n=256,d=8` or `grid:3x3`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: String| Error::InvalidParam(format!("generator spec {s:?}: {msg}"));
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut params: Vec<(&str, &str)> = Vec::new();
        for part in rest.split(',').filter(|p| !p.is_empty()) {
            match part.split_once('=') {
                Some((k, v)) => params.push((k.trim(), v.trim())),
                None if kind == "grid" => {
                    let (r, c) = part.split_once('x').ok_or_else(|| bad(format!("expected RxC, got {part:?}")))?;
                    params.push(("rows", r));
                    params.push(("cols", c));
                }
                None => return Err(bad(format!("expected key=value, got {part:?}"))),
            }
        }
        let get = |key: &str| -> Result<&str> {
            params.iter().find(|(k, _)| *k == key).map(|(_, v)| *v).ok_or_else(|| bad(format!("missing `{key}`")))
        };
        let int = |key: &str| -> Result<usize> {
            let v = get(key)?;
            v.parse().map_err(|_| bad(format!("`{key}` must be a non-negative integer, got {v:?}")))
        };
        let int_or = |key: &str, default: usize| -> Result<usize> {
            if params.iter().any(|(k, _)| *k == key) {
                int(key)
            } else {
                Ok(default)
            }
        };
        let allowed: &[&str] = match kind {
            "regular" | "random_regular" => &["n", "d"],
            "gnp" => &["n", "p"],
            "grid" => &["rows", "cols"],
            "layered" | "layered_dag" => &["h", "w", "k", "s"],
            "star" => &["leaves"],
            "tree" | "clique" | "cycle" | "path" => &["n"],
            _ => return Err(bad(format!("unknown generator kind {kind:?}"))),
        };
        if let Some((k, _)) = params.iter().find(|(k, _)| !allowed.contains(k)) {
            return Err(bad(format!("unknown parameter `{k}`")));
        }
        Ok(match kind {
            "regular" | "random_regular" => GenSpec::RandomRegular { n: int("n")?, d: int("d")? },
            "gnp" => {
                let p: f64 = get("p")?.parse().map_err(|_| bad("`p` must be a number".into()))?;
                GenSpec::Gnp { n: int("n")?, p }
            }
            "grid" => GenSpec::Grid { rows: int("rows")?, cols: int("cols")? },
            "tree" => GenSpec::Tree { n: int("n")? },
            "layered" | "layered_dag" => {
                GenSpec::Layered { h: int("h")?, w: int("w")?, k: int_or("k", 2)?, s: int_or("s", 0)? }
            }
            "clique" => GenSpec::Clique { n: int("n")? },
            "cycle" => GenSpec::Cycle { n: int("n")? },
            "path" => GenSpec::Path { n: int("n")? },
            "star" => GenSpec::Star { leaves: int("leaves")? },
            _ => unreachable!(),
        })
    }
}

pub fn generate(spec: &GenSpec, seed: u64) -> Result<SimGraph> {
    generate_with_layering(spec, seed).map(|(g, _)| g)
}

/// Like [`generate`]; layered generators also return the layer of every node
/// (1-based).
pub fn generate_with_layering(spec: &GenSpec, seed: u64) -> Result<(SimGraph, Option<Vec<u32>>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let infeasible = |msg: String| Err(Error::InfeasibleParams(format!("{spec}: {msg}")));
    let (n, edges, layering) = match *spec {
        GenSpec::RandomRegular { n, d } => {
            if d >= n.max(1) && !(n == 0 && d == 0) {
                return infeasible(format!("degree {d} needs more than {n} nodes"));
            }
            if (n * d) % 2 == 1 {
                return infeasible("n·d must be even".into());
            }
            (n, random_regular(n, d, &mut rng), None)
        }
        GenSpec::Gnp { n, p } => {
            if !(0.0..=1.0).contains(&p) {
                return infeasible(format!("edge probability {p} outside [0, 1]"));
            }
            (n, gnp(n, p, &mut rng), None)
        }
        GenSpec::Grid { rows, cols } => {
            let mut e = Vec::new();
            let at = |r: usize, c: usize| (r * cols + c) as NodeIdx;
            for r in 0..rows {
                for c in 0..cols {
                    if c + 1 < cols {
                        e.push((at(r, c), at(r, c + 1)));
                    }
                    if r + 1 < rows {
                        e.push((at(r, c), at(r + 1, c)));
                    }
                }
            }
            (rows * cols, e, None)
        }
        GenSpec::Tree { n } => {
            let e = (1..n).map(|i| (rng.gen_range(0..i) as NodeIdx, i as NodeIdx)).collect();
            (n, e, None)
        }
        GenSpec::Layered { h, w, k, s } => {
            if h > 1 && k > w {
                return infeasible(format!("cannot pick {k} distinct next-layer neighbors among {w}"));
            }
            if s > 0 && w < 2 {
                return infeasible("same-layer edges need at least 2 nodes per layer".into());
            }
            let (e, l) = layered(h, w, k, s, &mut rng);
            (h * w, e, Some(l))
        }
        GenSpec::Clique { n } => {
            let e = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u as NodeIdx, v as NodeIdx))).collect();
            (n, e, None)
        }
        GenSpec::Cycle { n } => {
            if n < 3 {
                return infeasible("a cycle needs at least 3 nodes".into());
            }
            let e = (0..n).map(|i| (i as NodeIdx, ((i + 1) % n) as NodeIdx)).collect();
            (n, e, None)
        }
        GenSpec::Path { n } => {
            let e = (1..n).map(|i| ((i - 1) as NodeIdx, i as NodeIdx)).collect();
            (n, e, None)
        }
        GenSpec::Star { leaves } => {
            let e = (1..=leaves).map(|i| (0, i as NodeIdx)).collect();
            (leaves + 1, e, None)
        }
    };
    Ok((SimGraph::from_index_edges(n, &edges)?, layering))
}

/// Uniform-ish random d-regular graph: a circulant d-regular graph scrambled by
/// degree-preserving double-edge swaps. Unlike rejection sampling of
/// pairings, this never fails for large d.
fn random_regular(n: usize, d: usize, rng: &mut ChaCha8Rng) -> Vec<(NodeIdx, NodeIdx)> {
    let key = |u: usize, v: usize| if u < v { (u, v) } else { (v, u) };
    let mut edges: Vec<(usize, usize)> = Vec::with_capacity(n * d / 2);
    for i in 0..n {
        for j in 1..=d / 2 {
            edges.push(key(i, (i + j) % n));
        }
        if d % 2 == 1 && i < n / 2 {
            edges.push(key(i, i + n / 2));
        }
    }
    let mut present: HashSet<(usize, usize)> = edges.iter().copied().collect();
    let m = edges.len();
    if m >= 2 {
        for _ in 0..10 * m {
            let i = rng.gen_range(0..m);
            let j = rng.gen_range(0..m);
            let ((a, b), (c, dd)) = (edges[i], edges[j]);
            let (x, y) = if rng.gen::<bool>() { (key(a, c), key(b, dd)) } else { (key(a, dd), key(b, c)) };
            if x.0 == x.1 || y.0 == y.1 || x == y || present.contains(&x) || present.contains(&y) {
                continue;
            }
            present.remove(&edges[i]);
            present.remove(&edges[j]);
            present.insert(x);
            present.insert(y);
            edges[i] = x;
            edges[j] = y;
        }
    }
    edges.sort_unstable();
    edges.into_iter().map(|(u, v)| (u as NodeIdx, v as NodeIdx)).collect()
}

/// G(n, p) by geometric skipping over the lower-triangular pair order.
fn gnp(n: usize, p: f64, rng: &mut ChaCha8Rng) -> Vec<(NodeIdx, NodeIdx)> {
    let mut e = Vec::new();
    if p <= 0.0 || n < 2 {
        return e;
    }
    if p >= 1.0 {
        return (0..n).flat_map(|u| (u + 1..n).map(move |v| (u as NodeIdx, v as NodeIdx))).collect();
    }
    let lq = (1.0 - p).ln();
    let (mut v, mut w) = (1usize, -1i64);
    while v < n {
        let r: f64 = rng.gen();
        w += 1 + ((1.0 - r).ln() / lq).floor() as i64;
        while w >= v as i64 && v < n {
            w -= v as i64;
            v += 1;
        }
        if v < n {
            e.push((w as NodeIdx, v as NodeIdx));
        }
    }
    e
}

fn layered(h: usize, w: usize, k: usize, s: usize, rng: &mut ChaCha8Rng) -> (Vec<(NodeIdx, NodeIdx)>, Vec<u32>) {
    let at = |l: usize, j: usize| (l * w + j) as NodeIdx;
    let mut set = HashSet::new();
    for l in 0..h {
        for j in 0..w {
            if l + 1 < h {
                let picks = rand::seq::index::sample(rng, w, k);
                for t in picks.iter() {
                    set.insert((at(l, j), at(l + 1, t)));
                }
            }
            for _ in 0..s {
                let mut t = rng.gen_range(0..w - 1);
                if t >= j {
                    t += 1;
                }
                let (a, b) = (at(l, j), at(l, t));
                set.insert((a.min(b), a.max(b)));
            }
        }
    }
    let mut e: Vec<_> = set.into_iter().collect();
    e.sort_unstable();
    let layers = (0..h * w).map(|v| (v / w.max(1)) as u32 + 1).collect();
    (e, layers)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_and_clique_sizes() {
        let g = generate(&"grid:3x3".parse().unwrap(), 0).unwrap();
        assert_eq!((g.n(), g.m()), (9, 12));
        let k = generate(&GenSpec::Clique { n: 5 }, 0).unwrap();
        assert_eq!((k.max_degree(), k.m()), (4, 10));
    }

    #[test]
    fn random_regular_is_regular_and_deterministic() {
        let spec: GenSpec = "regular:n=100,d=6".parse().unwrap();
        let a = generate(&spec, 7).unwrap();
        let b = generate(&spec, 7).unwrap();
        assert_eq!(a, b);
        assert!((0..100).all(|v| a.degree(v) == 6));
        assert_ne!(a, generate(&spec, 8).unwrap());
        let odd = generate(&"regular:n=10,d=3".parse().unwrap(), 1).unwrap();
        assert!((0..10).all(|v| odd.degree(v) == 3));
    }

    #[test]
    fn infeasible_parameters() {
        assert!(matches!(generate(&GenSpec::RandomRegular { n: 5, d: 3 }, 0), Err(Error::InfeasibleParams(_))));
        assert!(generate(&GenSpec::RandomRegular { n: 4, d: 4 }, 0).is_err());
        assert!(generate(&GenSpec::Gnp { n: 4, p: 1.5 }, 0).is_err());
        assert!("blob:n=3".parse::<GenSpec>().is_err());
        assert!("regular:n=3".parse::<GenSpec>().is_err());
        assert!("regular:n=4,d=2,q=1".parse::<GenSpec>().is_err());
    }

    #[test]
    fn gnp_extremes_and_density() {
        assert_eq!(generate(&GenSpec::Gnp { n: 6, p: 1.0 }, 3).unwrap().m(), 15);
        assert_eq!(generate(&GenSpec::Gnp { n: 6, p: 0.0 }, 3).unwrap().m(), 0);
        let g = generate(&GenSpec::Gnp { n: 400, p: 0.05 }, 3).unwrap();
        let expected = 0.05 * 400.0 * 399.0 / 2.0;
        assert!((g.m() as f64 - expected).abs() < 0.15 * expected);
    }

    #[test]
    fn layered_respects_layers() {
        let (g, l) = generate_with_layering(&"layered:h=4,w=10,k=3,s=1".parse().unwrap(), 2).unwrap();
        let l = l.unwrap();
        assert_eq!(g.n(), 40);
        for (u, v) in g.edges() {
            let (a, b) = (l[u as usize], l[v as usize]);
            assert!(a == b || a + 1 == b || b + 1 == a);
        }
    }

    #[test]
    fn spec_round_trips_through_display() {
        for s in ["regular:n=8,d=3", "tree:n=9", "layered:h=2,w=3,k=1,s=0", "star:leaves=4", "gnp:n=5,p=0.5"] {
            let spec: GenSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
    }
}
