use std::fmt::Write as _;

use tou_sched::artifacts::UnitReport;

/// Per-unit table: slab quantity, rolling length, processing time, power
/// demand, average load, start, end and idle time.
pub fn unit_table(units: &[UnitReport]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:>4} {:>6} {:>10} {:>9} {:>11} {:>9} {:>8} {:>8} {:>7}",
        "unit", "slabs", "length_km", "time_h", "energy_mwh", "load_mw", "start_h", "end_h", "idle_h"
    );
    for u in units {
        let _ = writeln!(
            s,
            "{:>4} {:>6} {:>10.3} {:>9.3} {:>11.3} {:>9.3} {:>8.3} {:>8.3} {:>7.3}",
            u.unit,
            u.slab_count,
            u.rolling_length_km,
            u.processing_time_h,
            u.power_demand_mwh,
            u.average_load_mw,
            u.start_h,
            u.end_h,
            u.idle_h
        );
    }
    s
}
