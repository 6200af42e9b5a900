use amgpi::famgpi::famgpi_solve;
use amgpi::game_model::{norm_inf, Game};
use amgpi::isaacs_disc::{GridMax, GridProblem, GridSpec, IsaacsSin, StoppingParabola};
use amgpi::policy_iteration::{solve_game, PiConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    norm_inf(&a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>())
}

fn isaacs_setup(m: usize, seed: u64) -> (GridSpec, amgpi::isaacs_disc::GridGame, Vec<f64>) {
    let p = IsaacsSin::default();
    let grid = GridSpec::new(2, m).unwrap();
    let game = p.build(&grid).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = p.exact_solution(&grid).unwrap().into_iter().map(|u| u + 1e-3 * rng.gen_range(-1.0..1.0)).collect();
    (grid, game, v)
}

fn lattice() -> impl Iterator<Item = [f64; 2]> {
    (0..41).flat_map(|i| (0..41).map(move |j| [-3.0 + 0.15 * i as f64, -3.0 + 0.15 * j as f64]))
}

#[test]
fn min_reply_beats_lattice() {
    let (grid, game, v) = isaacs_setup(16, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..20 {
        let x = rng.gen_range(0..grid.n_states());
        let r: f64 = rng.gen_range(0.0..1.0);
        let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let a = [r * t.cos(), r * t.sin()];
        let (b, val) = game.min_play(x, a, &v);
        let direct = game.one_step(x, &GridMax::Play(a), &b, &v).unwrap();
        assert!((direct - val).abs() <= 1e-13 * (1.0 + val.abs()));
        let best = lattice().map(|b| game.one_step(x, &GridMax::Play(a), &b, &v).unwrap()).fold(f64::INFINITY, f64::min);
        assert!(val <= best + 1e-13 * (1.0 + best.abs()), "x {x}: min_play {val} lattice {best}");
    }
}

#[test]
fn max_control_beats_sampled_ball() {
    let (grid, game, v) = isaacs_setup(16, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let x = rng.gen_range(0..grid.n_states());
        let (a, b, val) = game.best_max(x, &v).unwrap();
        let GridMax::Play(ac) = a else { panic!("stop in a unit-ball game") };
        assert!(ac[0].hypot(ac[1]) <= 1.0 + 1e-12);
        assert!((game.one_step(x, &a, &b, &v).unwrap() - val).abs() <= 1e-13 * (1.0 + val.abs()));
        let mut sampled = game.min_play(x, [0.0, 0.0], &v).1;
        for k in 0..64 {
            let t = std::f64::consts::TAU * k as f64 / 64.0;
            for r in [0.2, 0.4, 0.6, 0.8, 1.0] {
                sampled = sampled.max(game.min_play(x, [r * t.cos(), r * t.sin()], &v).1);
            }
        }
        assert!(val >= sampled - 1e-12 * (1.0 + sampled.abs()), "x {x}: best_max {val} sampled {sampled}");
    }
}

#[test]
fn min_reply_tracks_gradient_for_linear_values() {
    let grid = GridSpec::new(2, 32).unwrap();
    let game = IsaacsSin::default().build(&grid).unwrap();
    let g = [0.7, -0.4];
    let v: Vec<f64> = (0..grid.n_states())
        .map(|s| {
            let p = grid.state_point(s);
            g[0] * p[0] + g[1] * p[1]
        })
        .collect();
    for s in 0..grid.n_states() {
        let c = grid.coords(s);
        if c[0] < 2 || c[1] < 2 || c[0] > grid.m() - 2 || c[1] > grid.m() - 2 {
            continue;
        }
        let (b, _) = game.min_play(s, [0.0, 0.0], &v);
        assert!((b[0] - g[0]).abs() + (b[1] - g[1]).abs() <= 4.0 * grid.h(), "b {b:?} at {c:?}");
    }
}

fn stopping_policy(m: usize) -> (GridSpec, Vec<GridMax>) {
    let p = StoppingParabola::default();
    let grid = GridSpec::new(2, m).unwrap();
    let game = p.build(&grid).unwrap();
    let cfg = PiConfig { max_outer: 2000, ..PiConfig::default() };
    let s = solve_game(&game, game.initial_policy(), vec![0.0; grid.n_states()], &cfg, None).unwrap();
    assert!(s.report.converged());
    (grid, s.policy.alpha)
}

/// Continue points, and how many of them lie above the curve.
fn continue_counts(grid: &GridSpec, alpha: &[GridMax]) -> (usize, usize) {
    let mut n = (0, 0);
    for (x, a) in alpha.iter().enumerate() {
        if *a != GridMax::Stop {
            n.0 += 1;
            n.1 += StoppingParabola::above(&grid.state_point(x)[..2]) as usize;
        }
    }
    n
}

#[test]
fn stopping_region_follows_parabola() {
    let (grid, alpha) = stopping_policy(64);
    let h = grid.h();
    let mut misplaced = 0;
    for (x, a) in alpha.iter().enumerate() {
        let pt = grid.state_point(x);
        let above = StoppingParabola::above(&pt[..2]);
        let on_crossed_cell = (-1..=1).flat_map(|i| (-1..=1).map(move |j| (i, j))).any(|(i, j)| {
            StoppingParabola::above(&[pt[0] + i as f64 * h, pt[1] + j as f64 * h]) != above
        });
        if (*a == GridMax::Stop) == above && !on_crossed_cell {
            misplaced += 1;
        }
    }
    assert_eq!(misplaced, 0);
}

#[test]
fn stopping_continue_points_lie_above_parabola() {
    let (grid, alpha) = stopping_policy(64);
    let (cont, above) = continue_counts(&grid, &alpha);
    assert!(above as f64 >= 0.99 * cont as f64, "{above} of {cont} continue points above the curve");
}

#[test]
fn stopping_continue_fraction_improves_with_refinement() {
    let f: Vec<f64> = [32, 64, 128]
        .iter()
        .map(|&m| {
            let (grid, alpha) = stopping_policy(m);
            let (cont, above) = continue_counts(&grid, &alpha);
            above as f64 / cont as f64
        })
        .collect();
    assert!(f[0] < f[1] && f[1] < f[2], "fractions {f:?}");
}

#[test]
fn famg_agrees_with_cold_solve() {
    let p = StoppingParabola::default();
    let eps = 1e-9;
    let cfg = PiConfig::with_epsilon(eps);
    let famg = famgpi_solve(&p, 32, None, 0.01, eps, &cfg).unwrap();
    let grid = GridSpec::new(2, 32).unwrap();
    let game = p.build(&grid).unwrap();
    let cold = solve_game(&game, game.initial_policy(), vec![0.0; grid.n_states()], &cfg, None).unwrap();
    assert!(famg.finest().report.converged() && cold.report.converged());
    let gap = sup_diff(&famg.v, &cold.v);
    assert!(gap <= 2.0 * eps, "gap {gap:.3e}");
}

#[test]
fn famg_fine_iterations_grow_slowly() {
    let p = StoppingParabola::default();
    let cfg = PiConfig::default();
    let counts: Vec<usize> = [32, 64, 128]
        .iter()
        .map(|&m| famgpi_solve(&p, m, None, 0.01, 1e-10, &cfg).unwrap().finest().report.outer_iterations())
        .collect();
    assert!(counts[2] < 4 * counts[0], "fine-level outer iterations {counts:?}");
    assert!(counts[2] <= counts[1] + counts[0], "fine-level outer iterations {counts:?}");
}
