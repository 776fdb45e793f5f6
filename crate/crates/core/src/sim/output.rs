//! CSV serialization of simulation output. Floats use Rust's shortest
//! round-trip formatting, so identical runs give identical bytes.

use std::io::Write;

use super::HybridTrajectory;

fn header(prefix: &str, count: usize) -> impl Iterator<Item = String> + '_ {
    (1..=count).map(move |i| format!("{prefix}{i}"))
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

/// Writes `t,x1..xn,z1..zk,w,e1..en,is_jump`, keeping every `stride`-th row
/// plus every jump row and the final row.
pub fn write_trajectory<W: Write>(
    out: W,
    traj: &HybridTrajectory,
    stride: usize,
) -> csv::Result<()> {
    let stride = stride.max(1);
    let (n, k) = (traj.plant_dim(), traj.observer_dim());
    let mut wtr = csv::Writer::from_writer(out);
    let mut head = vec!["t".to_string()];
    head.extend(header("x", n));
    head.extend(header("z", k));
    head.push("w".into());
    head.extend(header("e", n));
    head.push("is_jump".into());
    wtr.write_record(&head)?;
    let last = traj.len().saturating_sub(1);
    for row in 0..traj.len() {
        if row % stride != 0 && !traj.is_jump[row] && row != last {
            continue;
        }
        let mut rec = Vec::with_capacity(head.len());
        rec.push(fmt(traj.times[row]));
        rec.extend(traj.x[row].iter().map(|v| fmt(*v)));
        rec.extend(traj.z[row].iter().map(|v| fmt(*v)));
        rec.push(fmt(traj.w[row]));
        rec.extend(traj.e[row].iter().map(|v| fmt(*v)));
        rec.push(if traj.is_jump[row] { "1" } else { "0" }.into());
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Writes `i,tau_i,gap,d_i,y,v,w_before,w_after`, one row per reset.
pub fn write_jumps<W: Write>(out: W, traj: &HybridTrajectory) -> csv::Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["i", "tau_i", "gap", "d_i", "y", "v", "w_before", "w_after"])?;
    for j in &traj.jumps {
        wtr.write_record([
            j.i.to_string(),
            fmt(j.tau),
            fmt(j.gap),
            fmt(j.d),
            fmt(j.y),
            fmt(j.v),
            fmt(j.w_before),
            fmt(j.w_after),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}
