//! BER versus SNR for every coding scheme, with and without relay buffers.
//!
//! ```text
//! cargo run --release --example ber_sweep -- [bits_per_point] [rake|mmse]
//! ```

use plnc::sim::{run_sweep, Protocol, SweepOptions, SweepPlan};
use plnc::{NcDesign, ReceiverKind, SystemConfig};

fn main() -> plnc::Result<()> {
    let mut args = std::env::args().skip(1);
    let bits: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(200_000);
    let receiver: ReceiverKind = match args.next() {
        Some(r) => r.parse()?,
        None => ReceiverKind::Mmse,
    };

    let config = SystemConfig {
        receiver,
        ..SystemConfig::default()
    };
    let plan = SweepPlan {
        snr_db: vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 14.0],
        bits_per_point: bits,
        protocols: vec![Protocol::Buffered, Protocol::Unbuffered],
    };
    let report = run_sweep(&config, &plan, &SweepOptions::default())?;

    println!(
        "receiver {receiver}, {bits} bits per point, {:.1} s",
        report.wall_clock.as_secs_f64()
    );
    for protocol in [Protocol::Buffered, Protocol::Unbuffered] {
        println!("\n{}", protocol.as_str());
        print!("{:>6}", "snr");
        for d in &config.schemes {
            print!("{:>22}", d.to_string());
        }
        println!();
        for &snr in &plan.snr_db {
            print!("{snr:>6}");
            for &d in &config.schemes {
                let p = report.point(d, protocol, snr).expect("point present");
                print!("{:>13.3e} ±{:.1e}", p.ber(), p.std_error());
            }
            println!();
        }
    }
    let ml = |p| report.point(NcDesign::Ml, p, 10.0).map(|x| x.ber()).unwrap_or(f64::NAN);
    println!(
        "\nbuffer gain for ml at 10 dB: {:.2}x",
        ml(Protocol::Unbuffered) / ml(Protocol::Buffered)
    );
    Ok(())
}
