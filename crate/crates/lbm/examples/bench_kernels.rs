use lbm::runner::fluid_sim_from_config;
use lbm::task::task_cavity_powerlaw;
use std::time::Instant;

fn main() {
    let task = task_cavity_powerlaw();
    let mut sim = fluid_sim_from_config(&task.config, None).unwrap();
    let t0 = Instant::now();
    let steps = 2000usize;
    sim.run(steps).unwrap();
    let dt = t0.elapsed().as_secs_f64();
    let nodes = 100.0 * 100.0 * steps as f64;
    println!("fluid power-law: {:.1} ns/node, {:.2} s for {} steps", dt / nodes * 1e9, dt, steps);

    // scalar kernel timing on the kpp strip
    let kpp = lbm::task::task_fisher_kpp();
    let mut s = lbm::runner::scalar_sim_from_config(&kpp.config).unwrap();
    let t0 = Instant::now();
    s.run(200).unwrap();
    let dt = t0.elapsed().as_secs_f64();
    let nodes = 4096.0 * 16.0 * 200.0;
    println!("scalar+reaction: {:.1} ns/node, {:.3} s for 200 steps", dt / nodes * 1e9, dt);
}
