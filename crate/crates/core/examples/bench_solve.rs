use randlp::sampling::*;
use randlp::solver::*;
use std::time::Instant;

fn main() {
    for (m, n, reps) in [(1000usize, 50usize, 40u64), (10000, 50, 5), (10000, 100, 3), (100000, 100, 1)] {
        let t0 = Instant::now();
        let mut piv = 0;
        for s in 0..reps {
            let a = sample_matrix(EntryDistribution::Gaussian, m, n, SeedSpec::new(1, 2 * s)).unwrap();
            let c = sample_cost_vector(CostVectorKind::UniformSphere, n, SeedSpec::new(1, 2 * s + 1)).unwrap();
            let out = solve(&LpInstance::new(a, c).unwrap(), &SolveOptions::default()).unwrap();
            piv += out.pivots();
        }
        println!("{m}x{n}: {:.2} ms/solve, {} pivots avg", t0.elapsed().as_secs_f64() * 1e3 / reps as f64, piv as u64 / reps);
    }
}
