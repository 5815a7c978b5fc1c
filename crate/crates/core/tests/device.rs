use approx::assert_relative_eq;
use proptest::prelude::*;
use schottky_mem::device::*;
use schottky_mem::electrostatics::{radius_study, FieldProfile, StudyRule};
use schottky_mem::error::Error;
use schottky_mem::params::{DeviceGeometry, MaterialParams};
use schottky_mem::permittivity::PermittivityModel;
use schottky_mem::waveform::{build_sweep, build_vertex_sweep, log_schedule};
use std::f64::consts::PI;

const EDGE_WIDTH: f64 = 124e-9;
const GAINS: [(f64, f64); 3] = [(1e-6, 11.62), (1e-5, 10.82), (1e-4, 10.21)];

fn geometry(radius: f64) -> DeviceGeometry {
    DeviceGeometry::with_edge_zone(radius, 0.5e-3, EDGE_WIDTH).unwrap()
}

fn device(radius: f64, gain: f64) -> DeviceState {
    new_device(geometry(radius), MaterialParams::default(), DeviceConfig::default(), gain).unwrap()
}

fn small() -> DeviceState {
    device(1e-6, 11.62)
}

#[test]
fn zone_areas_partition_the_disc() {
    let g = DeviceGeometry::with_edge_zone(1e-6, 0.5e-3, 200e-9).unwrap();
    let d = new_device(g, MaterialParams::default(), DeviceConfig::default(), 3.0).unwrap();
    assert_relative_eq!(d.center.area, 2.011e-12, max_relative = 1e-3);
    assert_relative_eq!(d.edge.area, 1.131e-12, max_relative = 1e-3);
    assert_relative_eq!(d.center.area + d.edge.area, PI * 1e-12, max_relative = 1e-12);
    assert_eq!(d.center.trap_state.n, 0.0);
    assert_eq!(d.edge.trap_state.n, 0.0);
    assert_eq!(d.edge.n0_local, 3.0 * d.center.n0_local);
    assert_eq!(d.center.field_gain, 1.0);
}

#[test]
fn profile_enhancement_becomes_edge_gain() {
    let g = geometry(1e-6);
    let profile = FieldProfile {
        radius: 1e-6,
        depth: 1e-9,
        v_applied: -3.0,
        r: vec![0.0, 1e-6],
        e_z: vec![1.0, 5.0],
        e_center: 1.0,
        e_max: 5.0,
        r_at_max: 1e-6,
        enhancement: 5.0,
    };
    let d = new_device_from_profile(g, MaterialParams::default(), DeviceConfig::default(), &profile).unwrap();
    assert_eq!(d.edge.field_gain, 5.0);
    let other = FieldProfile { radius: 2e-6, ..profile };
    assert!(new_device_from_profile(g, MaterialParams::default(), DeviceConfig::default(), &other).is_err());
}

#[test]
fn solved_profiles_give_ordered_gains() {
    let perm = PermittivityModel::constant(300.0);
    let profiles = radius_study(&[1e-4, 1e-5, 1e-6], &perm, -3.0, &StudyRule::default()).unwrap();
    let gains: Vec<f64> = profiles
        .iter()
        .map(|p| {
            let d = new_device_from_profile(geometry(p.radius), MaterialParams::default(), DeviceConfig::default(), p)
                .unwrap();
            d.edge.field_gain
        })
        .collect();
    assert!(gains[0] < gains[1] && gains[1] < gains[2], "{gains:?}");
}

#[test]
fn invalid_partitions_rejected() {
    assert!(DeviceGeometry::with_edge_zone(1e-6, 0.5e-3, 0.0).is_err());
    assert!(DeviceGeometry::with_edge_zone(1e-6, 0.5e-3, 1e-6).is_err());
    let g = geometry(1e-6);
    assert!(new_device(g, MaterialParams::default(), DeviceConfig::default(), 0.5).is_err());
    let bad = DeviceConfig { edge_trap_boost: 0.5, ..DeviceConfig::default() };
    assert!(new_device(g, MaterialParams::default(), bad, 2.0).is_err());
}

#[test]
fn zero_bias_only_advances_time() {
    let mut d = small();
    d.edge.trap_state.n = 2e25;
    d.center.trap_state.n = 1e24;
    let next = step(&d, 0.0, 10.0).unwrap();
    assert_eq!(next.edge.trap_state.n, d.edge.trap_state.n);
    assert_eq!(next.center.trap_state.n, d.center.trap_state.n);
    assert_eq!(next.t, d.t + 10.0);
    let c = current(&d, 0.0).unwrap();
    assert_eq!(c.total(), 0.0);
}

#[test]
fn step_validates_inputs() {
    let d = small();
    assert!(step(&d, -3.0, 0.0).is_err());
    assert!(step(&d, -3.0, -1.0).is_err());
    assert!(step(&d, f64::NAN, 1.0).is_err());
}

#[test]
fn oversized_step_is_reported() {
    let d = small();
    match step(&d, -3.0, 10.0) {
        Err(Error::StepSize { change, limit }) => assert!(change > limit),
        other => panic!("expected a step-size error, got {other:?}"),
    }
}

#[test]
fn edge_traps_faster_than_centre_under_reset() {
    let mut d = small();
    let mut prev = d;
    for t in log_schedule(1e-6, 1e3, 28).unwrap() {
        d = hold(d, -3.0, t - d.t).unwrap();
        let de = d.edge.trap_state.n - prev.edge.trap_state.n;
        let dc = d.center.trap_state.n - prev.center.trap_state.n;
        assert!(de > dc && dc > 0.0, "t {t}: edge {de:e} centre {dc:e}");
        // The same ordering holds for the instantaneous rates.
        let re = zone_drive(&d, &d.edge, -3.0).unwrap().trap_rate;
        let rc = zone_drive(&d, &d.center, -3.0).unwrap().trap_rate;
        assert!(re > rc, "t {t}: rates {re:e} {rc:e}");
        prev = d;
    }
}

#[test]
fn set_hold_empties_the_edge() {
    let d = hold(small(), -3.0, 1.0).unwrap();
    assert!(d.edge.trap_state.n > 1e24);
    let mut s = d;
    let mut last = s.edge.trap_state.n;
    for dur in [1e-3, 1e-2, 1e-1, 1.0] {
        s = hold(s, 2.0, dur).unwrap();
        assert!(s.edge.trap_state.n <= last);
        last = s.edge.trap_state.n;
    }
    assert!(last < 1e-3 * d.edge.trap_state.n, "{last:e}");
}

#[test]
fn release_rate_depends_on_bias_only() {
    let mut d = small();
    let a = zone_drive(&d, &d.edge, 1.0).unwrap().release_rate;
    d.edge.trap_state.n = 3e25;
    let b = zone_drive(&d, &d.edge, 1.0).unwrap();
    assert_eq!(a, b.release_rate);
    assert!(b.w_eff > zone_drive(&small(), &small().edge, 1.0).unwrap().w_eff);
    assert_eq!(zone_drive(&d, &d.edge, -1.0).unwrap().release_rate, 0.0);
    let k03 = zone_drive(&d, &d.edge, 0.3).unwrap().release_rate;
    assert!(k03 < 1e-3 && a > 1.0, "{k03:e} {a:e}");
}

#[test]
fn trapped_charge_lowers_current() {
    let fresh = small();
    let mut trapped = fresh;
    trapped.edge.trap_state.n = 1e25;
    for v in [-1.0, 0.3, 1.0] {
        let a = current(&fresh, v).unwrap().edge.abs();
        let b = current(&trapped, v).unwrap().edge.abs();
        assert!(b < a, "v {v}");
    }
}

#[test]
fn sweep_is_pinched_and_decomposes() {
    let wf = build_vertex_sweep(&[0.0, 2.0, -3.0, 0.0, 2.0, -3.0, 0.0], 1.52, 0.01).unwrap();
    let (s, tr) = run_sweep(small(), &wf).unwrap();
    assert_eq!(s.cycle_count, 3);
    let mut zeros = 0;
    for smp in &tr.samples {
        assert_eq!(smp.i, smp.i_center + smp.i_edge);
        assert!(smp.n_center >= 0.0 && smp.n_edge >= 0.0);
        if smp.v == 0.0 {
            assert_eq!(smp.i, 0.0);
            zeros += 1;
        }
    }
    assert!(zeros >= 2);
}

#[test]
fn sweep_branches_show_hysteresis() {
    let cycles = 3;
    let wf = build_sweep(2.0, -3.0, 1.52, cycles, 0.01).unwrap();
    let (_, tr) = run_sweep(small(), &wf).unwrap();
    let per = (tr.samples.len() - 1) / cycles;
    let last = &tr.samples[(cycles - 1) * per..];
    // +2 -> -3 is the LRS branch, -3 -> +2 the HRS branch.
    let at = |v: f64, lrs: bool| {
        last.iter()
            .enumerate()
            .filter(|(j, _)| (*j <= per / 2) == lrs)
            .min_by(|a, b| (a.1.v - v).abs().total_cmp(&(b.1.v - v).abs()))
            .unwrap()
            .1
            .i
    };
    for v in [0.3, 0.5] {
        assert!(at(v, true) > 3.0 * at(v, false), "v {v}: {} {}", at(v, true), at(v, false));
    }
    // Reverse branches differ too: the RESET side of the loop traps on the way down.
    assert!(at(-1.0, true).abs() > at(-1.0, false).abs());
    assert!(at(1.0, true) > at(1.0, false));
}

#[test]
fn virgin_small_sweep_is_nearly_closed() {
    let before = current(&small(), 0.3).unwrap().total();
    let wf = build_vertex_sweep(&[0.0, 1.0, -1.0, 0.0], 1.52, 0.01).unwrap();
    let after = current(&run_program(small(), &wf).unwrap(), 0.3).unwrap().total();
    let full = build_vertex_sweep(&[0.0, 2.0, -3.0, 0.0], 1.52, 0.01).unwrap();
    let reset = current(&run_program(small(), &full).unwrap(), 0.3).unwrap().total();
    assert!(after < before);
    assert!(before / after < 0.2 * (before / reset), "{before:e} {after:e} {reset:e}");
}

#[test]
fn consecutive_cycles_converge() {
    let cycles = 10;
    let wf = build_sweep(2.0, -3.0, 1.52, cycles, 0.01).unwrap();
    let (_, tr) = run_sweep(small(), &wf).unwrap();
    let per = (tr.samples.len() - 1) / cycles;
    for k in [3, 9] {
        let worst = (0..per)
            .map(|j| (tr.samples[(k - 1) * per + j], tr.samples[k * per + j]))
            .filter(|(a, _)| a.v != 0.0)
            .map(|(a, b)| ((b.i - a.i) / a.i).abs())
            .fold(0.0, f64::max);
        assert!(worst < 0.05, "cycle {k}: {worst}");
    }
}

#[test]
fn sweeps_are_deterministic() {
    let wf = build_sweep(2.0, -3.0, 1.52, 1, 0.05).unwrap();
    let (a, ta) = run_sweep(small(), &wf).unwrap();
    let (b, tb) = run_sweep(small(), &wf).unwrap();
    assert_eq!(a, b);
    assert_eq!(ta, tb);
}

#[test]
fn retention_states_approach_without_crossing() {
    let sched = log_schedule(1.0, 1e3, 31).unwrap();
    let (_, lrs) = run_retention(small(), 2.0, 0.3, &sched).unwrap();
    let (_, hrs) = run_retention(small(), -3.0, 0.3, &sched).unwrap();
    let (l, h) = (lrs.currents(), hrs.currents());
    assert!(l.windows(2).all(|w| w[1] <= w[0]));
    assert!(h.last().unwrap() > h.first().unwrap());
    assert!(l.iter().zip(&h).all(|(a, b)| a > b));
    assert!(l[30] - h[30] < l[0] - h[0]);
}

#[test]
fn retention_reads_at_zero_bias_are_zero() {
    let sched = log_schedule(1.0, 10.0, 5).unwrap();
    let (_, tr) = run_retention(small(), 2.0, 0.0, &sched).unwrap();
    assert!(tr.currents().iter().all(|i| *i == 0.0));
    assert!(run_retention(small(), 2.0, 0.6, &sched).is_err());
    assert!(run_retention(small(), 2.0, 0.3, &[2.0, 1.0]).is_err());
}

#[test]
fn memory_window_contract() {
    assert_eq!(memory_window(1e-10, 1e-9).unwrap(), 10.0);
    assert_eq!(memory_window(-1e-10, -1e-9).unwrap(), 10.0);
    assert!(memory_window(0.0, 1e-9).is_err());
    assert!(memory_window(1e-10, -1e-9).is_err());
    assert!(memory_window(1e-10, 0.0).is_err());
}

#[test]
fn single_endurance_cycle() {
    let (s, run) = run_endurance(small(), 1, 2.0, -3.0, 0.3).unwrap();
    assert_eq!(run.lrs.len(), 1);
    assert_eq!(run.hrs.len(), 1);
    assert_eq!(run.trace.len(), 2);
    assert_eq!(s.cycle_count, 1);
    assert!(run.lrs[0] > run.hrs[0]);
    assert!(run_endurance(small(), 0, 2.0, -3.0, 0.3).is_err());
}

#[test]
fn endurance_is_stable_after_burn_in() {
    let (_, run) = run_endurance(small(), 60, 2.0, -3.0, 0.3).unwrap();
    assert!(run.window_drift(10).unwrap() < 0.01);
    assert!(run.windows.iter().all(|w| *w > 5.0));
    assert!(run.window_drift(60).is_none());
}

#[test]
fn window_shrinks_with_radius() {
    let windows: Vec<f64> = GAINS
        .iter()
        .map(|&(r, g)| *run_endurance(device(r, g), 12, 2.0, -3.0, 0.3).unwrap().1.windows.last().unwrap())
        .collect();
    assert!(windows[0] > windows[1] && windows[1] > windows[2], "{windows:?}");
}

#[test]
fn null_device_windows_do_not_scale() {
    let windows: Vec<f64> = GAINS
        .iter()
        .map(|&(r, _)| {
            let d = new_null_device(geometry(r), MaterialParams::default(), DeviceConfig::default()).unwrap();
            *run_endurance(d, 12, 2.0, -3.0, 0.3).unwrap().1.windows.last().unwrap()
        })
        .collect();
    for w in &windows {
        assert!((w / windows[0] - 1.0).abs() < 0.01, "{windows:?}");
    }
}

#[test]
fn single_multilevel_pair_gives_one_band() {
    let (_, bands) = run_multilevel(small(), &[2.0], &[-3.0], 3, 0.3, 1.52).unwrap();
    assert_eq!(bands.len(), 1);
    assert_eq!(bands[0].reads.len(), 3);
    assert!(band_separation(&bands).is_none());
    assert!(run_multilevel(small(), &[], &[-3.0], 3, 0.3, 1.52).is_err());
    assert!(run_multilevel(small(), &[2.0], &[-3.0], 0, 0.3, 1.52).is_err());
    assert!(run_multilevel(small(), &[-2.0], &[-3.0], 1, 0.3, 1.52).is_err());
}

#[test]
fn deeper_reset_reads_lower() {
    for set_v in [1.0, 2.0] {
        let (_, bands) = run_multilevel(small(), &[set_v], &[-2.0, -2.5, -3.0], 5, 0.3, 1.52).unwrap();
        let means: Vec<f64> = bands.iter().map(|b| b.mean()).collect();
        assert!(means[0] > means[1] && means[1] > means[2], "SET {set_v}: {means:?}");
    }
}

#[test]
fn band_statistics() {
    let b = MultilevelBand { set_v: 1.0, reset_v: -2.0, reads: vec![1.0, 2.0, 3.0] };
    assert_eq!(b.mean(), 2.0);
    assert_eq!(b.std_dev(), 1.0);
    let c = MultilevelBand { reads: vec![7.0, 8.0, 9.0], ..b.clone() };
    assert_eq!(band_separation(&[c, b.clone()]), Some(6.0));
    let flat = MultilevelBand { reads: vec![1.0], ..b.clone() };
    let flat2 = MultilevelBand { reads: vec![2.0], ..b };
    assert_eq!(band_separation(&[flat, flat2]), Some(f64::INFINITY));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn trapped_density_stays_physical(biases in prop::collection::vec(-3.0f64..2.0, 1..6)) {
        let mut d = small();
        let mut cycles = d.cycle_count;
        for v in biases {
            d = hold(d, v, 0.05).unwrap();
            prop_assert!(d.edge.trap_state.n >= 0.0 && d.center.trap_state.n >= 0.0);
            prop_assert!(d.edge.trap_state.n.is_finite());
            prop_assert!(d.cycle_count >= cycles);
            cycles = d.cycle_count;
            let c = current(&d, 0.3).unwrap();
            prop_assert!(c.center > 0.0 && c.edge > 0.0);
        }
    }

    #[test]
    fn current_sign_follows_bias(v in -3.0f64..2.0) {
        prop_assume!(v.abs() > 1e-3);
        let c = current(&small(), v).unwrap();
        prop_assert_eq!(c.total().signum(), v.signum());
    }
}
