//! Library results checked against independently coded brute-force oracles.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sparsedom::calderon::{commutator, CalderonCommutator, LipschitzData, OperatorHandle};
use sparsedom::domination::{cz_decompose_indicator, CellSet};
use sparsedom::*;

fn small() -> Domain {
    // [-1, 1) with 24 cells
    Domain::new(1, 0, 2).unwrap()
}

fn random_weight(rng: &mut ChaCha8Rng, d: Domain, spread: f64) -> Weight {
    let v = (0..d.cell_count())
        .map(|_| (spread * (rng.random::<f64>() - 0.5)).exp())
        .collect();
    Weight::new(GridFunction::new(d, v).unwrap()).unwrap()
}

fn random_function(rng: &mut ChaCha8Rng, d: Domain) -> GridFunction {
    let v = (0..d.cell_count())
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    GridFunction::new(d, v).unwrap()
}

fn intervals(n: usize) -> Vec<(usize, usize)> {
    (0..n)
        .flat_map(|i| (i + 1..=n).map(move |j| (i, j)))
        .collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

/// Standard dyadic intervals written out from physical coordinates.
fn standard_dyadic_intervals(d: Domain) -> Vec<(usize, usize)> {
    let n = d.axis_cells() as i64;
    let mut out = Vec::new();
    // unit-length cubes and finer; coarser ones clip to the same sets here
    let mut side = 3i64 << d.refinement();
    loop {
        let mut lo = n / 2;
        while lo > 0 {
            lo -= side;
        }
        while lo < n {
            let a = lo.max(0);
            let b = (lo + side).min(n);
            if a < b {
                out.push((a as usize, b as usize));
            }
            lo += side;
        }
        if side % 2 != 0 {
            break;
        }
        side /= 2;
    }
    out
}

#[test]
fn ap_matches_interval_enumeration() {
    let d = small();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for &p in &[1.5, 2.0, 3.0] {
        for _ in 0..5 {
            let w = random_weight(&mut rng, d, 4.0);
            let v = w.as_function().values();
            let oracle = intervals(d.axis_cells())
                .into_iter()
                .map(|(a, b)| {
                    let s = &v[a..b];
                    let dual: Vec<f64> = s.iter().map(|x| x.powf(-1.0 / (p - 1.0))).collect();
                    mean(s) * mean(&dual).powf(p - 1.0)
                })
                .fold(0.0, f64::max);
            let got = ap_constant(&w, p, &CubeCollection::AllMeshAligned(d)).unwrap();
            assert!(close(got, oracle, 1e-12), "{got} vs {oracle}");
        }
    }
}

#[test]
fn ap_on_dyadic_grid_matches_physical_enumeration() {
    let d = small();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let w = random_weight(&mut rng, d, 3.0);
    let v = w.as_function().values();
    let oracle = standard_dyadic_intervals(d)
        .into_iter()
        .map(|(a, b)| {
            let s = &v[a..b];
            let inv: Vec<f64> = s.iter().map(|x| 1.0 / x).collect();
            mean(s) * mean(&inv)
        })
        .fold(0.0, f64::max);
    let got = ap_constant(&w, 2.0, &CubeCollection::Dyadic(DyadicGrid::standard(d))).unwrap();
    assert!(close(got, oracle, 1e-12), "{got} vs {oracle}");
}

#[test]
fn ainfty_matches_nested_enumeration() {
    let d = small();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..4 {
        let u = random_weight(&mut rng, d, 3.0);
        let v = u.as_function().values();
        let oracle = intervals(d.axis_cells())
            .into_iter()
            .map(|(a, b)| {
                // ∫_Q M(uχ_Q) / u(Q), M over subintervals of Q
                let total: f64 = (a..b)
                    .map(|x| {
                        intervals(b - a)
                            .into_iter()
                            .map(|(i, j)| (i + a, j + a))
                            .filter(|&(i, j)| i <= x && x < j)
                            .map(|(i, j)| mean(&v[i..j]))
                            .fold(0.0, f64::max)
                    })
                    .sum();
                total / v[a..b].iter().sum::<f64>()
            })
            .fold(0.0, f64::max);
        let got = ainfty_constant(&u, &CubeCollection::AllMeshAligned(d)).unwrap();
        assert!(close(got, oracle, 1e-12), "{got} vs {oracle}");
        let ap = ap_constant(&u, 2.0, &CubeCollection::AllMeshAligned(d)).unwrap();
        assert!(got <= ap * (1.0 + 1e-12));
    }
}

#[test]
fn multi_ap_two_cell_enumeration() {
    // [0, 1) with two cells of the standard grid
    let d = Domain::new(1, 0, 0).unwrap();
    let n = d.axis_cells();
    let make = |left: f64, right: f64| {
        let v = (0..n)
            .map(|i| {
                if d.center(i) < 0.5 && d.center(i) >= 0.0 {
                    left
                } else {
                    right
                }
            })
            .collect();
        Weight::new(GridFunction::new(d, v).unwrap()).unwrap()
    };
    let w1 = make(2.0, 1.0);
    let w2 = make(1.0, 2.0);
    let ws = WeightSystem::new(
        vec![w1.clone(), w2.clone()],
        ExponentTuple::new(&[2.0, 2.0]).unwrap(),
    )
    .unwrap();
    let cubes = CubeCollection::AllMeshAligned(d);
    let got = multi_ap_constant(&ws, &cubes).unwrap();
    // p = 1: ν = (w1 w2)^{1/2}, σ_j = w_j^{-1}
    let a = w1.as_function().values();
    let b = w2.as_function().values();
    let oracle = intervals(n)
        .into_iter()
        .map(|(i, j)| {
            let nu: Vec<f64> = (i..j).map(|c| (a[c] * b[c]).sqrt()).collect();
            let s1: Vec<f64> = (i..j).map(|c| 1.0 / a[c]).collect();
            let s2: Vec<f64> = (i..j).map(|c| 1.0 / b[c]).collect();
            mean(&nu) * mean(&s1).sqrt() * mean(&s2).sqrt()
        })
        .fold(0.0, f64::max);
    assert!(close(got, oracle, 1e-12), "{got} vs {oracle}");
    assert!(got >= 1.0);
}

#[test]
fn llogl_constant_matches_independent_root() {
    // u log(1 + u) = 1, solved by plain bisection
    let (mut lo, mut hi) = (0.0f64, 10.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid * (1.0 + mid).ln() < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lambda = 1.0 / (0.5 * (lo + hi));
    let d = small();
    let q = Cube::interval(d, 0.0, 1.0).unwrap();
    let got = orlicz_llogl(&GridFunction::constant(d, 1.0), &q, 1.0).unwrap();
    assert!((got - lambda).abs() < 1e-10, "{got} vs {lambda}");
    assert!((lambda - 0.8065).abs() < 1e-4);
}

#[test]
fn llogl_beta_zero_is_the_mean() {
    let d = small();
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let q = d.whole();
    for _ in 0..100 {
        let f = random_function(&mut rng, d);
        let m = mean(&f.values().iter().map(|v| v.abs()).collect::<Vec<_>>());
        assert!((orlicz_llogl(&f, &q, 0.0).unwrap() - m).abs() < 1e-12);
    }
}

#[test]
fn sign_step_oscillation() {
    let d = Domain::new(1, 0, 3).unwrap();
    let b = GridFunction::from_fn(d, |x| if x[0] < 0.0 { 1.0 } else { -1.0 });
    let cubes = CubeCollection::Explicit(vec![d.whole(), Cube::interval(d, -1.0, 0.0).unwrap()]);
    let v = osc_exp_ls(&b, 1.0, &cubes).unwrap();
    assert!((v - 1.0 / std::f64::consts::LN_2).abs() < 1e-10);
}

#[test]
fn hl_maximal_matches_interval_enumeration() {
    let d = small();
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let f = random_function(&mut rng, d);
    let got = hl_maximal(&f, &CubeCollection::AllMeshAligned(d)).unwrap();
    let a: Vec<f64> = f.values().iter().map(|v| v.abs()).collect();
    for x in 0..d.axis_cells() {
        let oracle = intervals(d.axis_cells())
            .into_iter()
            .filter(|&(i, j)| i <= x && x < j)
            .map(|(i, j)| mean(&a[i..j]))
            .fold(0.0, f64::max);
        assert!(close(got.values()[x], oracle, 1e-12));
    }
}

#[test]
fn hl_maximal_of_half_indicator() {
    // f = χ_[0,1/2) on the two-cell-per-half mesh of [0, 1)
    let d = Domain::new(1, 0, 1).unwrap();
    let n = d.axis_cells();
    let f = GridFunction::from_fn(d, |x| if (0.0..0.5).contains(&x[0]) { 1.0 } else { 0.0 });
    let inside: Vec<usize> = (0..n).filter(|&i| d.center(i) >= 0.0).collect();
    let start = inside[0];
    let cubes = CubeCollection::Explicit(
        intervals(inside.len())
            .into_iter()
            .map(|(i, j)| Cube::new_box(d, [(start + i) as i64, 0], [(j - i) as i64, 1]).unwrap())
            .collect(),
    );
    let m = hl_maximal(&f, &cubes).unwrap();
    for &i in &inside {
        let x = d.center(i);
        if x >= 0.5 {
            let right = d.edge(i as i64 + 1);
            assert!((m.values()[i] - 0.5 / right).abs() < 1e-14);
        }
    }
}

#[test]
fn dyadic_weighted_maximal_by_ancestors() {
    let d = small();
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let f = random_function(&mut rng, d);
    let u = random_weight(&mut rng, d, 2.0);
    let g = DyadicGrid::standard(d);
    let got = dyadic_weighted_maximal(&f, &u, 2.0, &g).unwrap();
    let uv = u.as_function().values();
    let fv = f.values();
    let dy = standard_dyadic_intervals(d);
    for x in 0..d.axis_cells() {
        let oracle = dy
            .iter()
            .filter(|&&(a, b)| a <= x && x < b)
            .map(|&(a, b)| {
                let num: f64 = (a..b).map(|c| fv[c] * fv[c] * uv[c]).sum();
                let den: f64 = uv[a..b].iter().sum();
                (num / den).sqrt()
            })
            .fold(0.0, f64::max);
        assert!(close(got.values()[x], oracle, 1e-12));
    }
}

#[test]
fn sharp_maximal_by_constant_search() {
    let d = small();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let f = random_function(&mut rng, d);
    let delta = 0.5;
    let g = DyadicGrid::standard(d);
    let got = sharp_maximal(&f, delta, &g).unwrap();
    let h: Vec<f64> = f.values().iter().map(|v| v.abs().sqrt()).collect();
    let best = |a: usize, b: usize| {
        // the objective is convex in c; golden-section search on [0, 1]
        let obj = |c: f64| mean(&h[a..b].iter().map(|v| (v - c).abs()).collect::<Vec<_>>());
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        let r = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..200 {
            let c1 = hi - r * (hi - lo);
            let c2 = lo + r * (hi - lo);
            if obj(c1) <= obj(c2) {
                hi = c2;
            } else {
                lo = c1;
            }
        }
        obj(0.5 * (lo + hi))
    };
    let dy = standard_dyadic_intervals(d);
    for x in 0..d.axis_cells() {
        let oracle = dy
            .iter()
            .filter(|&&(a, b)| a <= x && x < b)
            .map(|&(a, b)| best(a, b))
            .fold(0.0, f64::max)
            .powf(1.0 / delta);
        assert!((got.values()[x] - oracle).abs() < 1e-8);
    }
}

#[test]
fn orlicz_maximal_beta_zero_matches_products() {
    let d = small();
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    let f = random_function(&mut rng, d);
    let g = random_function(&mut rng, d);
    let got =
        multilinear_orlicz_maximal(&[&f, &g], &[0.0, 0.0], &CubeCollection::AllMeshAligned(d))
            .unwrap();
    let a: Vec<f64> = f.values().iter().map(|v| v.abs()).collect();
    let b: Vec<f64> = g.values().iter().map(|v| v.abs()).collect();
    for x in 0..d.axis_cells() {
        let oracle = intervals(d.axis_cells())
            .into_iter()
            .filter(|&(i, j)| i <= x && x < j)
            .map(|(i, j)| mean(&a[i..j]) * mean(&b[i..j]))
            .fold(0.0, f64::max);
        assert!(close(got.values()[x], oracle, 1e-12));
    }
}

/// A random nested family: each chosen cube keeps one child for refinement and
/// the other as its witness.
fn random_nested_family(rng: &mut ChaCha8Rng, d: Domain) -> SparseFamily {
    let mut family = SparseFamily::empty(d, Ratio::new(1, 2).unwrap());
    let top = (d.axis_cells() / 3) as i64;
    for t in 0..3 {
        let mut q = Cube::new(d, [t * top, 0], top).unwrap();
        loop {
            if !q.can_subdivide() || rng.random_bool(0.25) {
                family.push(q, q.row_ranges()).unwrap();
                break;
            }
            let kids = children(&q).unwrap();
            let keep = rng.random_range(0..2);
            family.push(q, kids[1 - keep].row_ranges()).unwrap();
            q = kids[keep];
        }
    }
    family
}

#[test]
fn sparse_operator_matches_double_loop() {
    let d = Domain::new(1, 0, 4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    for _ in 0..10 {
        let family = random_nested_family(&mut rng, d);
        assert_eq!(verify_sparse(&family), Ok(()));
        let f = random_function(&mut rng, d);
        let g = random_function(&mut rng, d);
        let spec = SparseOperatorSpec::averages(family.clone(), 2).unwrap();
        let got = eval_sparse(&spec, &[&f, &g]).unwrap();
        for x in 0..d.cell_count() {
            let mut oracle = 0.0;
            for q in family.cubes() {
                if !q.contains_cell(x) {
                    continue;
                }
                let cells = q.cells();
                let ma =
                    cells.iter().map(|&c| f.values()[c].abs()).sum::<f64>() / cells.len() as f64;
                let mb =
                    cells.iter().map(|&c| g.values()[c].abs()).sum::<f64>() / cells.len() as f64;
                oracle += ma * mb;
            }
            assert!(close(got.values()[x], oracle, 1e-12));
        }
    }
}

#[test]
fn one_third_trick_by_exhaustive_search() {
    let d = Domain::new(1, 0, 4).unwrap();
    let grids = shifted_grids(d);
    let r = Cube::interval(d, 0.4, 0.6).unwrap();
    let len = |c: &Cube| c.extent()[0] as f64 * d.cell_width();
    let found = grids
        .iter()
        .flat_map(|g| g.cubes())
        .any(|q| q.contains(&r) && q.is_cube() && len(&q) <= 6.0 * 0.2 + 1e-12);
    assert!(found);
    for g in &grids {
        if let Some((_, q)) = g.enclosing(&r) {
            assert!(q.contains(&r));
        }
    }
}

#[test]
fn cz_selects_the_largest_dense_ancestor() {
    let d = Domain::new(1, 0, 3).unwrap();
    let q0 = Cube::new(d, [0, 0], 16).unwrap();
    for cell in 0..16usize {
        let e = CellSet::new(d, vec![cell]).unwrap();
        let got = cz_decompose_indicator(&e, &q0, 0.25).unwrap();
        // ancestors of the cell strictly inside q0, coarse to fine
        let mut oracle = None;
        for side in [8i64, 4, 2, 1] {
            let lo = (cell as i64 / side) * side;
            if 1.0 / side as f64 > 0.25 {
                oracle = Some(Cube::new(d, [lo, 0], side).unwrap());
                break;
            }
        }
        assert_eq!(got, vec![oracle.unwrap()]);
        assert_eq!(got[0].extent()[0], 2);
    }
}

/// Composite Gauss–Legendre on `[a, b]`.
fn quad(f: impl Fn(f64) -> f64, a: f64, b: f64, pieces: usize) -> f64 {
    let nodes = [
        (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
        (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
        (0.0, 0.568_888_888_888_888_9),
        (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
        (0.906_179_845_938_664, 0.236_926_885_056_189_1),
    ];
    let h = (b - a) / pieces as f64;
    (0..pieces)
        .map(|k| {
            let c = a + (k as f64 + 0.5) * h;
            nodes
                .iter()
                .map(|&(x, w)| w * f(c + 0.5 * h * x))
                .sum::<f64>()
                * 0.5
                * h
        })
        .sum()
}

#[test]
fn calderon_matches_direct_quadrature() {
    let d = Domain::new(1, 0, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for m in [1usize, 2] {
        let slopes: Vec<GridFunction> = (0..m).map(|_| random_function(&mut rng, d)).collect();
        let f = random_function(&mut rng, d);
        let lip = LipschitzData::new(slopes).unwrap();
        let got = apply_c(&lip, &f).unwrap();
        for i in 0..d.axis_cells() {
            let x = d.center(i);
            let mut oracle = 0.0;
            for c in 0..d.axis_cells() {
                if c == i {
                    continue;
                }
                let kernel = |y: f64| {
                    let num: f64 = (0..m)
                        .map(|j| lip.antiderivative(j, x) - lip.antiderivative(j, y))
                        .product();
                    num / (x - y).powi(m as i32 + 1)
                };
                oracle += f.values()[c] * quad(kernel, d.edge(c as i64), d.edge(c as i64 + 1), 64);
            }
            assert!(
                (got.values()[i] - oracle).abs() < 1e-9,
                "m={m} cell {i}: {} vs {oracle}",
                got.values()[i]
            );
        }
    }
}

#[test]
fn commutator_matches_step_expansion() {
    let d = Domain::new(1, 0, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let op = CalderonCommutator::new(d, 2).unwrap();
    let a1 = random_function(&mut rng, d);
    let a2 = random_function(&mut rng, d);
    let f = random_function(&mut rng, d);
    // b = Σ_i c_i χ_{I_i} on four intervals
    let pieces = [(-1.0, -0.5), (-0.5, 0.0), (0.0, 0.25), (0.25, 1.0)];
    let coeffs: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
    let chis: Vec<GridFunction> = pieces
        .iter()
        .map(|&(a, b)| GridFunction::indicator(&Cube::interval(d, a, b).unwrap(), 1.0))
        .collect();
    let mut b = GridFunction::zeros(d);
    for (c, chi) in coeffs.iter().zip(&chis) {
        b = b.add(&chi.scale(*c)).unwrap();
    }
    for slot in 0..3 {
        let inputs = [&a1, &a2, &f];
        let got = commutator(&op, &b, slot, &inputs).unwrap();
        let plain = op.eval(&inputs).unwrap();
        let mut oracle = vec![0.0; d.cell_count()];
        for (c, chi) in coeffs.iter().zip(&chis) {
            let moved = inputs[slot].mul(chi).unwrap();
            let mut swapped = inputs;
            swapped[slot] = &moved;
            let t = op.eval(&swapped).unwrap();
            for x in 0..d.cell_count() {
                oracle[x] += c * (chi.values()[x] * plain.values()[x] - t.values()[x]);
            }
        }
        for x in 0..d.cell_count() {
            assert!(
                (got.values()[x] - oracle[x]).abs() < 1e-10,
                "slot {slot} cell {x}"
            );
        }
    }
}

#[test]
fn kernel_size_condition_on_random_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for m in 1..=2usize {
        let mut worst: f64 = 0.0;
        for _ in 0..10_000 {
            let x = rng.random_range(-1.0..1.0);
            let ys: Vec<f64> = (0..=m).map(|_| rng.random_range(-1.0..1.0)).collect();
            let k = kernel_c(x, &ys).unwrap();
            let s: f64 = ys.iter().map(|y| (x - y).abs()).sum();
            worst = worst.max(k.abs() * s.powi(m as i32 + 1));
        }
        // on the support every |x - y_j| is at most |x - y_{m+1}|
        assert!(
            worst <= ((m + 1) as f64).powi(m as i32 + 1) + 1e-9,
            "m={m}: {worst}"
        );
        assert!(worst > 0.0);
    }
}
