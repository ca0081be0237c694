//! Brute-force oracles over the built-in environments.

use std::fmt::Write as _;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{walker, CorridorNav, Environment, Intercept2d, Walker1d};
use crate::error::{Error, Result};

/// Fixed parameters of the intercept slice: heading and both speeds at the
/// middle of their ranges.
pub const SLICE_HEADING: f64 = PI;
pub const SLICE_SPEED: f64 = 0.55;

/// Critical flags of the intercept slice on an `n x n` grid of cell centres
/// over `(x0, y0)`. Row `i` holds `x0` index `i`, column `j` holds `y0`
/// index `j`.
pub fn intercept_slice(env: &Intercept2d, n: usize) -> Result<Vec<Vec<bool>>> {
    let b = env.bounds();
    let (xw, yw) = ((b[0].1 - b[0].0) / n as f64, (b[1].1 - b[1].0) / n as f64);
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let x = b[0].0 + (i as f64 + 0.5) * xw;
                    let y = b[1].0 + (j as f64 + 0.5) * yw;
                    Ok(env.run(&[x, y, SLICE_HEADING, SLICE_SPEED, SLICE_SPEED])?.critical)
                })
                .collect()
        })
        .collect()
}

/// Text form of a slice map: a comment header, then one line of `0`/`1`
/// per row.
pub fn slice_to_text(map: &[Vec<bool>]) -> String {
    let n = map.len();
    let mut out = format!(
        "# intercept2d slice {n}x{n} over (x0, y0) cell centres; heading {SLICE_HEADING}, speeds {SLICE_SPEED}\n"
    );
    for row in map {
        for &c in row {
            out.push(if c { '1' } else { '0' });
        }
        out.push('\n');
    }
    out
}

pub fn slice_from_text(text: &str) -> Result<Vec<Vec<bool>>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.starts_with('#') && !l.is_empty())
        .map(|(i, l)| {
            l.chars()
                .map(|c| match c {
                    '0' => Ok(false),
                    '1' => Ok(true),
                    _ => Err(Error::Parse {
                        line: i + 1,
                        reason: format!("unexpected `{c}` in slice map"),
                    }),
                })
                .collect()
        })
        .collect()
}

pub fn critical_fraction(map: &[Vec<bool>]) -> f64 {
    let total: usize = map.iter().map(Vec::len).sum();
    let hits: usize = map.iter().flatten().filter(|&&c| c).count();
    hits as f64 / total as f64
}

/// Uniform samples over the box of `env`.
pub fn uniform_samples(env: &dyn Environment, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = env.bounds();
    (0..n)
        .map(|_| b.iter().map(|&(lo, hi)| rng.random_range(lo..=hi)).collect())
        .collect()
}

/// Fraction of `samples` the environment flags critical.
pub fn simulated_fraction(env: &dyn Environment, samples: &[Vec<f64>]) -> Result<f64> {
    let mut hits = 0usize;
    for s in samples {
        if env.run(s)?.critical {
            hits += 1;
        }
    }
    Ok(hits as f64 / samples.len() as f64)
}

/// Walker critical fraction from the closed-form clearance rule.
pub fn walker_closed_form_fraction(samples: &[Vec<f64>]) -> f64 {
    samples.iter().filter(|h| walker::is_critical(h)).count() as f64 / samples.len() as f64
}

/// Critical fraction of the walker box in closed form: the probability that
/// some consecutive pair of uniform heights on `[-1, 1]` rises by more than
/// `H_MAX`, computed by a transfer-matrix recursion on a fine height grid.
pub fn walker_exact_fraction(resolution: usize) -> f64 {
    let n = resolution;
    let h = |i: usize| -1.0 + 2.0 * (i as f64 + 0.5) / n as f64;
    // p[i]: probability of no failure so far with current height in bin i
    let mut p = vec![1.0 / n as f64; n];
    for _ in 1..walker::SEGMENTS {
        let mut prefix = vec![0.0; n + 1];
        for i in 0..n {
            prefix[i + 1] = prefix[i] + p[i];
        }
        p = (0..n)
            .map(|j| {
                // previous heights with h(j) - h(i) <= H_MAX
                let lo = (0..n).find(|&i| h(j) - h(i) <= walker::H_MAX).unwrap_or(n);
                (prefix[n] - prefix[lo]) / n as f64
            })
            .collect();
    }
    1.0 - p.iter().sum::<f64>()
}

/// Corridor scenario with two equal obstacles mirrored about the start-goal
/// diagonal, leaving a gap too narrow to pass, and a third obstacle out of
/// the way.
pub fn corridor_trap() -> Vec<f64> {
    vec![4.6, 3.4, 0.8, 3.4, 4.6, 0.8, 9.5, 0.5, 0.2, 8.0, 8.0]
}

/// Runs the trap scenario and reports whether it times out.
pub fn corridor_trap_times_out(env: &CorridorNav, scenario: &[f64]) -> Result<bool> {
    let ep = env.run(scenario)?;
    Ok(ep.violations() == vec![super::Constraint::Timeout])
}

/// `key = value` fixture text for a corridor scenario.
pub fn corridor_fixture_text(scenario: &[f64]) -> String {
    let names = ["o1_x", "o1_y", "o1_r", "o2_x", "o2_y", "o2_r", "o3_x", "o3_y", "o3_r", "goal_x", "goal_y"];
    let mut out = String::from("# corridor_nav local-minimum trap; expected outcome: timeout\n");
    for (k, v) in names.iter().zip(scenario) {
        let _ = writeln!(out, "{k} = {v}");
    }
    out
}

pub fn corridor_fixture_from_text(text: &str) -> Result<Vec<f64>> {
    text.lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .enumerate()
        .map(|(i, l)| {
            let v = l.split_once('=').map(|(_, v)| v.trim()).unwrap_or("");
            v.parse().map_err(|_| Error::Parse {
                line: i + 1,
                reason: format!("bad fixture line `{l}`"),
            })
        })
        .collect()
}

/// Summary lines for every oracle, as printed by the command-line tool.
pub fn summary(slice_n: usize, mc_samples: usize, seed: u64) -> Result<String> {
    let mut out = String::new();
    let ic = Intercept2d::new();
    let map = intercept_slice(&ic, slice_n)?;
    let _ = writeln!(out, "intercept2d slice {slice_n}x{slice_n}: critical fraction {}", critical_fraction(&map));
    let samples = uniform_samples(&ic, mc_samples, seed);
    let _ = writeln!(out, "intercept2d box monte carlo ({mc_samples}): {}", simulated_fraction(&ic, &samples)?);
    let w = Walker1d::new();
    let samples = uniform_samples(&w, mc_samples, seed);
    let _ = writeln!(
        out,
        "walker1d monte carlo ({mc_samples}): simulated {} closed form {} exact {}",
        simulated_fraction(&w, &samples)?,
        walker_closed_form_fraction(&samples),
        walker_exact_fraction(4000)
    );
    let c = CorridorNav::new();
    let _ = writeln!(out, "corridor_nav trap times out: {}", corridor_trap_times_out(&c, &corridor_trap())?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slice_text_round_trip() {
        let map = vec![vec![true, false], vec![false, false]];
        assert_eq!(slice_from_text(&slice_to_text(&map)).unwrap(), map);
        assert_eq!(critical_fraction(&map), 0.25);
    }

    #[test]
    fn walker_exact_fraction_single_pair() {
        // one boundary: P(h2 - h1 > 1.5) for two uniforms on [-1, 1] is 1/32
        let p = walker_exact_fraction(2000);
        // eight segments, seven boundaries; bounded by the union bound
        assert!(p > 1.0 / 32.0 && p < 7.0 / 32.0);
    }

    #[test]
    fn corridor_fixture_round_trip() {
        let s = corridor_trap();
        assert_eq!(corridor_fixture_from_text(&corridor_fixture_text(&s)).unwrap(), s);
    }
}
