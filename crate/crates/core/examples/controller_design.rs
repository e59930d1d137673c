//! Inertias, plant models and a PI-lead design for each turret axis.

use atr_turret::controldesign::{analyze_loop, design_pi_lead, DesignSpec, PiLeadController};
use atr_turret::turretmodel::{compute_inertias, plant_pair, Axis, TurretParams};

fn main() -> atr_turret::Result<()> {
    let params = TurretParams::default();
    let (j1, j2) = compute_inertias(&params, None);
    println!("J1 = {j1:.2} kg m^2, J2 = {j2:.2} kg m^2");

    let plants = plant_pair(&params)?;
    for axis in Axis::BOTH {
        let p = plants.get(axis);
        let published = analyze_loop(p, &PiLeadController::published(axis))?;
        println!(
            "{}: published controller gives {:.3} Hz at {:.2} deg phase margin",
            axis.name(),
            published.crossover_hz(),
            published.phase_margin_deg
        );

        // a fresh design at 6 Hz shows the gain and lead being placed
        let spec = DesignSpec::new(2.0 * std::f64::consts::PI * 6.0, 60.0);
        let c = design_pi_lead(p, &spec)?;
        let a = analyze_loop(p, &c)?;
        println!(
            "  designed: Kp {:.4e}, TI {:.4} s, TD {:.5} s, gamma {:.4} -> {:.3} Hz, {:.2} deg",
            c.kp,
            c.ti,
            c.td,
            c.gamma,
            a.crossover_hz(),
            a.phase_margin_deg
        );
    }
    Ok(())
}
