//! Library-consumer view of the crate: drive the whole chain through the
//! public API the way an external tool would — generate, persist, reload,
//! execute, report — and check the structural identities that must hold at
//! every configuration, not just the design point.

use icaprep::checks;
use icaprep::io;
use icaprep::matrix::CMat;
use icaprep::pipeline::{self, RunConfig};
use icaprep::report::RunReport;
use icaprep::scenario::lookup_scenario;

fn small_config(n: usize, m: usize, seed: u64) -> RunConfig {
    RunConfig {
        channels: n,
        samples: m,
        seed,
        ..RunConfig::default()
    }
}

#[test]
fn chain_survives_a_file_round_trip_bit_for_bit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(6, 64, 42);

    // Generate and quantize exactly as `execute` does, but persist the block
    // in both layouts before running on it.
    let kind = lookup_scenario(&cfg.scenario).unwrap();
    let block = kind.generate(cfg.channels, cfg.samples, cfg.seed).unwrap();
    let input = CMat::quantize(&block.observations, cfg.format().unwrap());

    let csv = dir.path().join("block.csv");
    let raw = dir.path().join("block.sig");
    io::write_block(&csv, &input).unwrap();
    io::write_block(&raw, &input).unwrap();
    let from_csv = io::read_block(&csv).unwrap();
    let from_raw = io::read_block(&raw).unwrap();
    assert_eq!(from_csv, input, "text layout must be lossless");
    assert_eq!(from_raw, input, "binary layout must be lossless");

    let direct = pipeline::execute(&cfg).unwrap();
    let reloaded = pipeline::execute_on(&cfg, from_csv).unwrap();
    assert_eq!(
        direct.evd.eigenvalues, reloaded.evd.eigenvalues,
        "a reloaded block must reproduce the run bit for bit"
    );
    assert_eq!(direct.evd.matrix, reloaded.evd.matrix);

    // And the report of that run survives its own round trip.
    let report_path = dir.path().join("run.json");
    let report = RunReport::from_run(&direct);
    io::save_report(&report_path, &report).unwrap();
    let back = io::load_report(&report_path).unwrap();
    assert_eq!(back.eigenvalues.fixed, report.eigenvalues.fixed);
    assert_eq!(back.cycles.total_latency, report.cycles.total_latency);
}

#[test]
fn cycle_figures_obey_their_structural_identities_at_every_shape() {
    for (n, m) in [(4, 32), (6, 64), (8, 512), (10, 256), (16, 128)] {
        let cfg = small_config(n, m, 3);
        let run = pipeline::execute(&cfg).unwrap();
        let c = &run.cycles;
        assert_eq!(
            c.load,
            (n * m / 2) as u64,
            "{n}x{m}: two samples per write cycle"
        );
        assert_eq!(
            c.total_latency,
            c.prep_latency + c.evd,
            "{n}x{m}: latency halves must add"
        );
        assert_eq!(
            c.bound_period,
            c.prep_period.max(c.evd),
            "{n}x{m}: steady state is paced by the slower half"
        );
        let expected = cfg.clock_hz / c.bound_period as f64;
        assert!(
            (c.throughput_per_s - expected).abs() < 1e-9,
            "{n}x{m}: throughput must be clock over bound period"
        );
        assert!(
            c.prep_latency >= c.load,
            "{n}x{m}: cannot finish before loading"
        );
    }
}

#[test]
fn a_converged_matrix_makes_extra_sweeps_arithmetic_no_ops() {
    let short = pipeline::execute(&small_config(6, 64, 9)).unwrap();
    let long = {
        let mut cfg = small_config(6, 64, 9);
        cfg.evd_sweeps = 30;
        pipeline::execute(&cfg).unwrap()
    };
    assert_eq!(
        short.evd.eigenvalues, long.evd.eigenvalues,
        "once frozen, further sweeps must not move a single bit"
    );
    assert_eq!(short.evd.vectors, long.evd.vectors);
    assert!(
        long.evd.skipped_rotations > short.evd.skipped_rotations,
        "the extra sweeps must show up as skipped rotations"
    );
    assert!(
        long.cycles.evd > short.cycles.evd,
        "the schedule still issues the extra blocks"
    );
}

#[test]
fn accuracy_budgets_hold_away_from_the_design_shape() {
    // The budgets are pinned at the eight-channel design shape. Every entry
    // is touched once per ordering and a sweep has n−1 orderings, so the
    // rotation-driven error figures grow like √(n−1); hold off-design runs
    // to the design budgets scaled by that envelope (never below them).
    for (n, m, seed) in [(4usize, 64usize, 21u64), (6, 128, 22), (10, 512, 23)] {
        let envelope = ((n as f64 - 1.0) / 7.0).sqrt().max(1.0);
        for scenario in ["qpsk_sources", "gaussian_mix_check", "two_tone"] {
            let mut cfg = small_config(n, m, seed);
            cfg.scenario = scenario.to_string();
            let run = pipeline::execute(&cfg).unwrap();
            let a = &run.accuracy;
            assert!(
                a.covariance_max_err_lsb <= checks::COVARIANCE_BUDGET_LSB,
                "{scenario} {n}x{m}: covariance {:.2} LSB",
                a.covariance_max_err_lsb
            );
            assert!(
                a.eigenvalue_max_err_lsb <= checks::EIGENVALUE_BUDGET_LSB * envelope,
                "{scenario} {n}x{m}: eigenvalues {:.2} LSB",
                a.eigenvalue_max_err_lsb
            );
            assert!(
                a.unitarity_err_lsb <= checks::UNITARITY_BUDGET_LSB * envelope,
                "{scenario} {n}x{m}: unitarity {:.2} LSB",
                a.unitarity_err_lsb
            );
            // Whiteness in LSB units amplifies by 1/λ_min, so it is an
            // operating-point claim: the high-peak-factor Gaussian stressor
            // deliberately shrinks the spectrum and inflates that ratio.
            if scenario == "qpsk_sources" {
                assert!(
                    a.whiteness_err_lsb <= checks::WHITENESS_BUDGET_LSB * envelope,
                    "{scenario} {n}x{m}: whiteness {:.2} LSB",
                    a.whiteness_err_lsb
                );
            }
            assert_eq!(
                a.saturation_count, 0,
                "{scenario} {n}x{m}: scaled scenarios must not saturate"
            );
        }
    }
}

#[test]
fn shape_and_format_mismatches_are_rejected_not_mangled() {
    let cfg = small_config(6, 64, 1);
    let kind = lookup_scenario(&cfg.scenario).unwrap();
    let block = kind.generate(8, 64, 1).unwrap();
    let wrong_shape = CMat::quantize(&block.observations, cfg.format().unwrap());
    let err = pipeline::execute_on(&cfg, wrong_shape).unwrap_err();
    assert!(
        err.to_string().contains("8×64"),
        "shape mismatch must name the offending shape: {err}"
    );

    let bad = RunConfig {
        channels: 7,
        ..small_config(6, 64, 1)
    };
    assert!(
        pipeline::execute(&bad).is_err(),
        "odd channel counts have no pair orderings and must be rejected"
    );
}
