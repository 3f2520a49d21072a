//! Bound values checked against an independent 40-digit evaluation of the same
//! formulas (mpmath, series tails by Euler-Maclaurin), frozen here.
#![allow(clippy::excessive_precision)]

use streamopt::bounds::{
    assg_bound_constant, assg_bound_general, assg_bound_varying, derived_constants,
    fourth_moment_bound, ssg_bound_constant, ssg_bound_general, ssg_bound_varying,
    stretched_exp_series, BlockSeq, BoundValue,
};
use streamopt::models::ProblemConstants;
use streamopt::schedules::{BatchSchedule, LearningRateParams};

fn pc() -> ProblemConstants {
    ProblemConstants {
        mu: 1.0,
        c_nabla: 1.0,
        c_l: 1.0,
        sigma: 1.0,
        tau: 1.0,
        c_delta: 0.0,
        lambda_cr: 1.0,
        delta0: 1.0,
        delta0_4: 1.0,
        estimated: false,
    }
}

fn close(got: f64, want: f64, rel: f64, what: &str) {
    assert!(
        (got - want).abs() <= rel * want.abs(),
        "{what}: got {got:e}, want {want:e}, rel err {:e}",
        ((got - want) / want).abs()
    );
}

fn close_terms(v: &BoundValue, want: &[f64], rel: f64) {
    assert_eq!(v.terms.len(), want.len());
    for ((name, got), w) in v.terms.iter().zip(want) {
        close(*got, *w, rel, name);
    }
    close(v.total, want.iter().sum(), rel, "total");
}

#[test]
fn last_iterate_general_unit_batches() {
    let lr = LearningRateParams::new(1.0, 2.0 / 3.0, 0.0).unwrap();
    let v = ssg_bound_general(&pc(), &lr, &BatchSchedule::constant(1), 100).unwrap();
    close_terms(&v, &[21776.019363523830437, 0.14736125994561546423], 1e-12);
}

#[test]
fn last_iterate_constant_closed_form() {
    let mut p = pc();
    p.delta0 = 10.0;
    let lr = LearningRateParams::new(1.0, 2.0 / 3.0, 0.0).unwrap();
    let v = ssg_bound_constant(&p, &lr, 8, 8000).unwrap();
    close_terms(&v, &[94.43402003412650195, 0.0039685026299204986869], 1e-12);
    assert!(v.valid);
}

#[test]
fn last_iterate_varying_closed_form() {
    let mut p = pc();
    p.delta0 = 10.0;
    let lr = LearningRateParams::new(0.5, 0.75, 0.25).unwrap();
    let v = ssg_bound_varying(&p, &lr, 4.0, 0.3, 10000).unwrap();
    close_terms(&v, &[44351.595587726800733, 0.0033058012726168468445], 1e-12);
}

fn lemma_setup() -> (ProblemConstants, LearningRateParams, BatchSchedule) {
    let mut p = pc();
    p.c_nabla = 2.0;
    p.tau = 1.5;
    p.delta0_4 = 2.0;
    let lr = LearningRateParams::new(0.3, 0.7, 0.2).unwrap();
    (p, lr, BatchSchedule::varying(2.0, 0.4))
}

#[test]
fn fourth_moment_general() {
    let (p, lr, s) = lemma_setup();
    let v = fourth_moment_bound(&p, &lr, &s, 50).unwrap();
    close_terms(
        &v,
        &[
            1.3486658513474080295e+26,
            0.0071529410819288509957,
            0.000071295270895631617825,
            0.0011852838786398756463,
        ],
        1e-11,
    );
}

#[test]
fn averaged_general_from_curves() {
    let (mut p, lr, s) = lemma_setup();
    p.c_delta = 0.5;
    p.lambda_cr = 2.0;
    let mut delta = vec![p.delta0];
    let mut delta4 = vec![p.delta0_4];
    for t in 1..=50 {
        delta.push(ssg_bound_general(&p, &lr, &s, t).unwrap().total);
        delta4.push(fourth_moment_bound(&p, &lr, &s, t).unwrap().total);
    }
    let v = assg_bound_general(&p, &lr, &s, 50, &delta, &delta4).unwrap();
    close_terms(
        &v,
        &[
            0.076249285166302333167,
            5.1487384504900687622,
            5.7364186782743578555,
            0.022685088435971398045,
            0.30767076261469385641,
            2656337951571.9931822,
        ],
        1e-11,
    );
    let b = BlockSeq::from_schedule(&lr, &s, 50).unwrap();
    assert_eq!(b.cumulative()[50], b.n.iter().sum::<f64>());
}

#[test]
fn a_inf_unit_parameters() {
    let c = 1.0 / 2f64.powf(2.0 - 2.0 / 3.0);
    let v = stretched_exp_series(0.0, c, 1.0 / 3.0).unwrap();
    close(v.value, 96.598670501998940868, 1e-13, "a_inf");
    assert!(v.tail_bound < 1e-15);
}

#[test]
fn a_inf_saturates_to_one() {
    let lr = LearningRateParams::new(1e4, 0.75, 0.0).unwrap();
    let d = derived_constants(&pc(), &lr, &BatchSchedule::constant(1)).unwrap();
    close(d.a_inf, 1.0, 1e-15, "a_inf");
}

fn cor_setup() -> ProblemConstants {
    let mut p = pc();
    p.c_l = 0.5;
    p.c_delta = 0.5;
    p.lambda_cr = 2.0;
    p
}

#[test]
fn averaged_constant_closed_form() {
    let p = cor_setup();
    let lr = LearningRateParams::new(0.3, 0.75, 0.0).unwrap();
    let d = derived_constants(&p, &lr, &BatchSchedule::constant(2)).unwrap();
    close(d.pi_c(), 1.9640329759698471871, 1e-12, "pi_c");
    close(d.pi_c_prime(), 17.676296783728624684, 1e-12, "pi_c'");
    close(d.big_pi_c(), 1124.4648358612267941, 1e-12, "Pi_c");
    close(d.big_pi_c_prime(), 39806.055189487428509, 1e-12, "Pi_c'");
    close(d.a_inf, 94815.353624870653611, 1e-9, "a_inf");
    close(d.gamma_c(), 10787762.713104902843, 1e-9, "gamma_c");
    let v = assg_bound_constant(&p, &lr, 2, 10000).unwrap();
    close_terms(
        &v,
        &[
            0.014142135623730950488,
            0.03777629598045929754,
            0.0012727922061357855439,
            158019.45357739853313,
            0.00015882975935765764514,
            2157.5525426209805686,
            0.0020965078519441579101,
        ],
        1e-9,
    );
}

#[test]
fn averaged_varying_closed_form() {
    let p = cor_setup();
    let lr = LearningRateParams::new(0.3, 0.75, 0.25).unwrap();
    let d = derived_constants(&p, &lr, &BatchSchedule::varying(2.0, 0.4)).unwrap();
    close(d.pi_v(), 5.2311433501332198758, 1e-12, "pi_v");
    close(d.pi_v_prime(), 47.080290151198978882, 1e-12, "pi_v'");
    close(d.big_pi_v(), 27372213.304193351648, 1e-12, "Pi_v");
    close(d.big_pi_v_prime(), 1034669662.8985086923, 1e-12, "Pi_v'");
    close(d.a_inf_prime, 44681.520245560512893, 1e-9, "a_inf'");
    close(d.gamma_v(), 949943065.03307756785, 1e-9, "gamma_v");
    let v = assg_bound_varying(&p, &lr, 2.0, 0.4, 10000).unwrap();
    close_terms(
        &v,
        &[
            0.014142135623730950488,
            0.095633677193983474899,
            0.00020490603851315932783,
            102194.20082885063339,
            0.0001246153034647858271,
            189988.61300661551357,
            0.0033184640754479209702,
        ],
        1e-9,
    );
}

fn encloses(r: f64, c: f64, s: f64, want: f64) -> f64 {
    let v = stretched_exp_series(r, c, s).unwrap();
    assert!(v.value >= want * (1.0 - 1e-14), "{v:?} below {want:e}");
    assert!(v.value - v.tail_bound <= want * (1.0 + 1e-14), "{v:?} above {want:e}");
    v.tail_bound / v.value
}

#[test]
fn slow_series_convex_tail_enclosure() {
    let rel = encloses(0.0, 0.05, 0.25, 3840000.515765468080101024);
    assert!(rel < 1e-9);
}

#[test]
fn very_slow_series_peak_enclosure() {
    let rel = encloses(
        0.4431022416778335,
        0.08649228816728503,
        0.20935659010100682,
        59880038827.36097903858795,
    );
    assert!(rel < 1e-3);
}
