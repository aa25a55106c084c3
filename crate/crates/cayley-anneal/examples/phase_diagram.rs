//! Classical phase diagram of the G10 tree: brute-force ground states over
//! the (U/Ω0, Δf/Ω0) plane, printed as an ASCII map.
//!
//!     cargo run --example phase_diagram

use cayley_anneal::config::ExperimentConfig;
use cayley_anneal::groundstate::phase_diagram;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ExperimentConfig::preset(1)?;
    let (g, _geo) = cfg.build_graph()?;
    let omega0 = cfg.physical_constants().omega0;

    let us: Vec<f64> = (0..13).map(|i| 0.2 + 0.45 * i as f64).collect();
    let dfs: Vec<f64> = (0..21).map(|i| -2.0 + 0.5 * i as f64).collect();

    // Rows scan Δf top-down; columns scan U left-right.
    println!("G10 ground-state phases (rows Δf/Ω0 = 8 → −2, columns U/Ω0 = 0.2 → 5.6)\n");
    for &df in dfs.iter().rev() {
        let grid: Vec<(f64, f64)> = us.iter().map(|&u| (u, df)).collect();
        let row = phase_diagram(&g, &grid, omega0)?;
        let cells: Vec<&str> = row.iter().map(|p| p.label.as_str()).collect();
        println!("  Δf/Ω0 = {df:5.1} | {}", cells.join(" "));
    }

    println!("\nreference points:");
    for (u, df) in [(1.0, -1.0), (1.0, 1.0), (0.2, 1.0), (1.82, 2.0)] {
        let p = &phase_diagram(&g, &[(u, df)], omega0)?[0];
        println!(
            "  U/Ω0 = {u:4.2}, Δf/Ω0 = {df:5.2}  →  phase {:5}  (degeneracy {})",
            p.label.as_str(),
            p.degeneracy
        );
    }
    Ok(())
}
