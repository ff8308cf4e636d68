use std::f64::consts::PI;

use mhd_regularity::pressure::{
    freespace_bump_state, pointwise_split, pressure_freespace, pressure_periodic, total_pressure_direct,
    total_pressure_freespace, total_pressure_periodic,
};
use mhd_regularity::synthetic::CurlBump;
use mhd_regularity::{Grid, VectorField};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn freespace_matches_direct_summation_at_random_nodes() {
    let (u, b) = freespace_bump_state(32, 4.0, 0.8).unwrap();
    let grid = *u.grid();
    let total = total_pressure_freespace(&u, &b, 2).unwrap();
    let scale = total.max_abs();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let nodes: Vec<usize> = (0..5)
        .map(|_| {
            let c = |r: &mut ChaCha8Rng| r.random_range(8..24);
            grid.index(c(&mut rng), c(&mut rng), c(&mut rng))
        })
        .collect();
    let points: Vec<_> = nodes.iter().map(|&m| grid.position_of(m)).collect();
    let direct = total_pressure_direct(&u, &b, &points).unwrap();
    for (&m, d) in nodes.iter().zip(&direct) {
        let err = (total.values()[m] - d).abs() / scale;
        assert!(err < 0.01, "node {m}: fft {} direct {d} err {err}", total.values()[m]);
    }
}

#[test]
fn far_field_decays_like_inverse_cube() {
    let (u, b) = freespace_bump_state(64, 4.0, 0.5).unwrap();
    let e = [1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0];
    let at = |d: f64| [d * e[0], d * e[1], d * e[2]];
    let vals = total_pressure_direct(&u, &b, &[at(2.0), at(4.0)]).unwrap();
    let ratio = vals[1] / vals[0];
    assert!((ratio * 8.0 - 1.0).abs() < 0.2, "ratio {ratio}");
}

#[test]
fn split_reproduces_freespace_pressure_and_is_radius_independent() {
    let (u, b) = freespace_bump_state(64, 4.0, 0.8).unwrap();
    let grid = *u.grid();
    let h = grid.spacing();
    let total = total_pressure_freespace(&u, &b, 2).unwrap();
    let node = grid.index(34, 30, 33);
    let x = grid.position_of(node);
    let target = total.values()[node];
    let mut sums = Vec::new();
    for d in [4.0 * h, 8.0 * h] {
        let (i1, i2) = pointwise_split(&u, &b, x, d).unwrap();
        let sum = (i1 + i2) / (4.0 * PI);
        assert!((sum - target).abs() <= 0.02 * target.abs(), "d {d}: {sum} vs {target}");
        sums.push(sum);
    }
    assert!((sums[0] - sums[1]).abs() <= 0.02 * sums[0].abs());
}

#[test]
fn split_far_from_support_is_all_exterior() {
    let grid = Grid::centered(64, 4.0).unwrap();
    let u = CurlBump::around([0.9, 0.0, 0.0], 0.8, 1.0).sample(grid);
    let b = VectorField::zeros(grid);
    let x = [-1.0, 0.0, 0.0];
    let (i1, i2) = pointwise_split(&u, &b, x, 0.4).unwrap();
    assert!(i1.abs() < 1e-3 * i2.abs(), "{i1} {i2}");
    let direct = total_pressure_direct(&u, &b, &[x]).unwrap()[0];
    assert!((i2 / (4.0 * PI) - direct).abs() < 0.02 * direct.abs(), "{i2} vs {direct}");
}

#[test]
fn zero_fields_split_to_zero() {
    let grid = Grid::centered(16, 4.0).unwrap();
    let z = VectorField::zeros(grid);
    assert_eq!(pointwise_split(&z, &z, [0.0; 3], 0.6).unwrap(), (0.0, 0.0));
    let bundle = pressure_freespace(&z, &z, 2).unwrap();
    assert_eq!(bundle.p.max_abs(), 0.0);
}

#[test]
fn box_translation_translates_pressure() {
    let g = Grid::new(16, 2.0 * PI).unwrap();
    let s = mhd_regularity::solver::random_solenoidal_init(g, 3, -2.0).unwrap();
    let shift = |v: &VectorField| {
        VectorField::new(
            roll(v.component(0)),
            roll(v.component(1)),
            roll(v.component(2)),
        )
        .unwrap()
    };
    let p = total_pressure_periodic(&s.u, &s.b).unwrap();
    let q = total_pressure_periodic(&shift(&s.u), &shift(&s.b)).unwrap();
    let err = roll(&p).zip_map(&q, |a, c| a - c).unwrap().max_abs();
    assert!(err < 1e-12 * p.max_abs());
}

fn roll(f: &mhd_regularity::ScalarField) -> mhd_regularity::ScalarField {
    let g = *f.grid();
    let n = g.n();
    let vals = (0..g.len())
        .map(|m| {
            let [i, j, k] = g.coords(m);
            f.values()[g.index((i + n - 3) % n, (j + n - 1) % n, k)]
        })
        .collect();
    mhd_regularity::ScalarField::from_values(g, vals).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn periodic_total_pressure_is_quadratic(seed in 0u64..1000, lambda in -3.0f64..3.0) {
        let g = Grid::new(8, 2.0 * PI).unwrap();
        let s = mhd_regularity::solver::random_solenoidal_init(g, seed, -1.0).unwrap();
        let p = total_pressure_periodic(&s.u, &s.b).unwrap();
        let q = total_pressure_periodic(&s.u.scaled(lambda), &s.b.scaled(lambda)).unwrap();
        let err = p.zip_map(&q, |a, c| lambda * lambda * a - c).unwrap().max_abs();
        prop_assert!(err <= 1e-12 * (1.0 + lambda * lambda) * p.max_abs());
    }

    #[test]
    fn sign_parts_reconstruct_exactly(seed in 0u64..1000) {
        let g = Grid::new(8, 2.0 * PI).unwrap();
        let s = mhd_regularity::solver::random_solenoidal_init(g, seed, -1.0).unwrap();
        let bun = pressure_periodic(&s.u, &s.b).unwrap();
        for m in 0..g.len() {
            prop_assert!(bun.p_plus.values()[m] >= 0.0 && bun.p_minus.values()[m] >= 0.0);
            prop_assert_eq!(bun.p_plus.values()[m] - bun.p_minus.values()[m], bun.p.values()[m]);
        }
    }
}
