//! Feeds a stream of test outcomes through the window monitor and shows
//! when the generator would switch modes.

use dualfuzz::generator::{MonitorConfig, WindowMonitor};

fn main() -> dualfuzz::Result<()> {
    for hysteresis in [1, 3] {
        let mut monitor = WindowMonitor::new(MonitorConfig {
            window: 10,
            theta: 0.2,
            hysteresis,
        })?;
        // a productive phase followed by a dry spell and a recovery
        let outcomes = "1010010000000000000000111011100000".chars().map(|c| c == '1');
        let mut trace = String::new();
        for critical in outcomes {
            let mode = monitor.choose_mode();
            trace.push(if mode.as_str() == "local" { 'L' } else { 'G' });
            monitor.push(critical);
        }
        println!("h = {hysteresis}: {trace}");
    }
    Ok(())
}
