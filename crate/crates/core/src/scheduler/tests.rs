use super::*;
use crate::cases::desk30;
use crate::engine::EngineConfig;
use crate::network::Grid;
use crate::profiles::synthetic::{self, SyntheticSpec};

#[test]
fn year_at_five_minutes_has_52_segments() {
    let segs = partition(0..365 * 288, 5);
    assert_eq!(segs.len(), 52);
    assert!(segs[..51].iter().all(|s| s.range[1] - s.range[0] == 2016));
    assert_eq!(segs[51].range[1] - segs[51].range[0], 2016 + 288);
}

#[test]
fn short_horizons() {
    assert_eq!(partition(0..7 * 24, 60).len(), 1);
    let two = partition(0..14 * 24, 60);
    assert_eq!(two.iter().map(|s| s.range).collect::<Vec<_>>(), vec![[0, 168], [168, 336]]);
    // shorter than a week still gives one segment
    assert_eq!(partition(10..20, 60)[0].range, [10, 20]);
}

#[test]
fn partition_covers_horizon() {
    for (len, res) in [(1000, 5), (8760, 60), (35040, 15), (200, 30)] {
        let segs = partition(3..3 + len, res);
        assert_eq!(segs.first().unwrap().range[0], 3);
        assert_eq!(segs.last().unwrap().range[1], 3 + len);
        for w in segs.windows(2) {
            assert_eq!(w[0].range[1], w[1].range[0]);
        }
        let total: usize = segs.iter().map(|s| s.range[1] - s.range[0]).sum();
        assert_eq!(total, len);
    }
}

fn empty_segment(a: usize, b: usize) -> SegmentResult {
    SegmentResult {
        range: [a, b],
        states: Vec::new(),
        actions: Vec::new(),
        diagnostics: Vec::new(),
        failure: None,
        final_state: None,
    }
}

#[test]
fn overlapping_segments_rejected() {
    let err = merge(vec![empty_segment(0, 10), empty_segment(5, 20)]).unwrap_err();
    assert!(matches!(err, SchedulerError::OverlapDetected(5)));
    let ok = merge(vec![empty_segment(10, 20), empty_segment(0, 10)]).unwrap();
    assert_eq!(ok.ranges, vec![[0, 10], [10, 20]]);
}

struct Fixture {
    grid: Grid,
    profiles: crate::profiles::TimeSeriesDataset,
    config: EngineConfig,
}

fn fixture() -> Fixture {
    let grid = Grid::new(desk30()).unwrap();
    let spec = SyntheticSpec {
        days: 14,
        ..Default::default()
    };
    let profiles = synthetic::generate(grid.model(), &spec);
    Fixture {
        grid,
        profiles,
        config: EngineConfig::default(),
    }
}

#[test]
fn chained_segments_equal_one_run() {
    let f = fixture();
    let sim = Simulator::new(&f.grid, &f.profiles, &f.config, None).unwrap();
    let plan = RunPlan::new(sim.horizon(), 60, RunMode::Sequential, 1, 0);
    assert_eq!(plan.segments.len(), 2);
    let store = execute(&plan, &sim).unwrap();
    let init = sim.initialize().unwrap();
    let whole = sim.run_segment_from(init, sim.horizon()).unwrap();
    assert_eq!(store.states, whole.states);
    assert_eq!(store.actions, whole.actions);
}

#[test]
fn parallel_store_independent_of_workers() {
    let f = fixture();
    let sim = Simulator::new(&f.grid, &f.profiles, &f.config, None).unwrap();
    let one = execute(&RunPlan::new(sim.horizon(), 60, RunMode::Parallel, 1, 12), &sim).unwrap();
    let many = execute(&RunPlan::new(sim.horizon(), 60, RunMode::Parallel, 8, 12), &sim).unwrap();
    assert_eq!(one.digest(), many.digest());
    assert_eq!(one.states.len(), 336);
    assert_eq!(one.steps().collect::<Vec<_>>(), (0..336).collect::<Vec<_>>());
}

#[test]
fn merge_is_associative() {
    let f = fixture();
    let sim = Simulator::new(&f.grid, &f.profiles, &f.config, None).unwrap();
    let init = sim.initialize().unwrap();
    let a = sim.run_segment(&init.state, 0..100).unwrap();
    let b = sim.run_segment(a.final_state.as_ref().unwrap(), 100..200).unwrap();
    let c = sim.run_segment(b.final_state.as_ref().unwrap(), 200..336).unwrap();
    let [sa, sb, sc] = [a, b, c].map(AnnualResultStore::from_segment);
    let left = sa.clone().append(sb.clone()).unwrap().append(sc.clone()).unwrap();
    let right = sa.append(sb.append(sc).unwrap()).unwrap();
    assert_eq!(left, right);
}
