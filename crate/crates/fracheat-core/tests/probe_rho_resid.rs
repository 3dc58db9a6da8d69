
use fracheat_core::nonlocal::{frac_laplacian_pv, SampledFunction};
use fracheat_core::spectral::{eigenvalue_asymptotic, FracOrder, Grid, HalfLineFamily};

#[test]
fn refinement_effect() {
    let s = FracOrder::new(0.75).unwrap();
    let fam = HalfLineFamily::shared(s).unwrap();
    for k in [2usize, 8] {
        for n in [4096usize, 8192, 16384] {
            let grid = Grid::uniform(n).unwrap();
            let samples = fam.rho_samples(k, grid.interior_nodes()).unwrap();
            let u = SampledFunction::interior(&grid, &samples).unwrap();
            let mu_pow = eigenvalue_asymptotic(k, s);
            let mut sup = 0.0f64;
            for (i, &x) in grid.interior_nodes().iter().enumerate() {
                if i % 64 != 0 || x.abs() > 0.9 {
                    continue;
                }
                let r = (frac_laplacian_pv(&u, x, s).unwrap() - mu_pow * samples[i]).abs();
                sup = sup.max(r);
            }
            println!("k={k} n={n}: sup residual {sup:.4e}");
        }
    }
}
