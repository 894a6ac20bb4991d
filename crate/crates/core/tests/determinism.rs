use distcolor::coloring::{congest_list_coloring, delta_plus_one, local_list_coloring, ListInstance, Pipeline};
use distcolor::layered::arboricity_coloring;
use distcolor::simcore::{generate, GenSpec};
use distcolor::{EngineConfig, Rational, Simulator};

fn graph() -> distcolor::SimGraph {
    generate(&GenSpec::RandomRegular { n: 1500, d: 6 }, 11).unwrap()
}

/// Low threshold so rounds really take the parallel path.
fn parallel(cfg: EngineConfig) -> Simulator {
    Simulator::new(EngineConfig { par_threshold: 1, ..cfg })
}

#[test]
fn parallel_and_sequential_runs_agree() {
    let g = graph();
    let inst = ListInstance::delta_plus_one(g.topology().clone());
    for congest in [false, true] {
        let cfg = if congest { EngineConfig::congest(96) } else { EngineConfig::local() };
        let (mut a, mut b) = (parallel(cfg.clone()), Simulator::new(cfg.sequential()));
        let (ra, rb) = if congest {
            (congest_list_coloring(&mut a, &inst).unwrap(), congest_list_coloring(&mut b, &inst).unwrap())
        } else {
            (local_list_coloring(&mut a, &inst).unwrap(), local_list_coloring(&mut b, &inst).unwrap())
        };
        assert_eq!(ra.assignment, rb.assignment);
        assert_eq!(a.trace, b.trace);
    }
}

#[test]
fn repeated_runs_give_identical_traces() {
    let g = graph();
    let run = || {
        let mut s = parallel(EngineConfig::congest(128));
        let out = arboricity_coloring(&mut s, g.topology(), 6, &Rational::new(1, 2), Pipeline::Congest).unwrap();
        (out.assignment().clone(), s.trace)
    };
    assert_eq!(run(), run());
    let mut s1 = parallel(EngineConfig::local());
    let mut s2 = parallel(EngineConfig::local());
    let a = delta_plus_one(&mut s1, g.topology(), Pipeline::Local).unwrap();
    let b = delta_plus_one(&mut s2, g.topology(), Pipeline::Local).unwrap();
    assert_eq!(a.assignment, b.assignment);
    assert_eq!(s1.trace, s2.trace);
}
