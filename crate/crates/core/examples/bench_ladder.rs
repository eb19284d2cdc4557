use dotprobe::*;

fn main() {
    let p = SystemParams::<f64>::new(1.0, 0.0, 26.0, 24.0).unwrap();
    let gamma = p.derived().gamma_d;
    let t_max = 10.0 / gamma;
    let n_max = choose_n_max(&p, t_max, 1e-12);
    println!("t_max = {t_max:.3}, n_max = {n_max}");
    let grid: Vec<f64> = (0..51).map(|k| t_max * k as f64 / 50.0).collect();
    let start = std::time::Instant::now();
    let traj = evolve_ladder(&p, &QubitState::excited(), &grid, n_max).unwrap();
    let dt = start.elapsed();
    let worst = traj
        .ladders
        .iter()
        .map(|l| (l.total_mass() - 1.0).abs())
        .fold(0.0f64, f64::max);
    println!("elapsed: {dt:?}, worst |trace-1| = {worst:e}");
    let (s11, _) = traj.last().marginal();
    let rtraj = evolve_reduced(&p, &QubitState::excited(), &grid).unwrap();
    println!(
        "sigma11: ladder {s11:.12}, reduced {:.12}, diff {:e}",
        rtraj.sigma11(50),
        (s11 - rtraj.sigma11(50)).abs()
    );
}
