#![allow(dead_code)]

use std::collections::BTreeMap;

pub const DAYS: usize = 36;
pub const STATES: [&str; 5] = ["CA", "MA", "NJ", "NY", "TX"];

/// Daily cases per (state, sex). NY peaks first, then NJ, then CA.
pub fn cases(day: usize, state: &str, sex: &str) -> i64 {
    let d = day as i64;
    let base = match state {
        "NY" if d < 12 => 40 * d,
        "NY" if d < 24 => 40 * (24 - d),
        "NJ" if (12..24).contains(&d) => 30 * (d - 12),
        "NJ" if d >= 24 => 30 * (36 - d),
        "CA" if d >= 24 => 50 * (d - 24),
        "MA" => 10 + d,
        _ => 5,
    };
    if sex == "f" {
        base * 2 / 5
    } else {
        base - base * 2 / 5
    }
}

pub fn date(day: usize) -> String {
    let start = 60; // day of year of 2020-03-01
    let doy = start + day;
    let (month, dom) = if doy < 91 { (3, doy - 60 + 1) } else { (4, doy - 91 + 1) };
    format!("2020-{month:02}-{dom:02}")
}

pub fn states_csv() -> String {
    let mut out = String::from("date,state,sex,cases\n");
    for day in 0..DAYS {
        for state in STATES {
            for sex in ["f", "m"] {
                out.push_str(&format!("{},{state},{sex},{}\n", date(day), cases(day, state, sex)));
            }
        }
    }
    out
}

/// Independent per-state daily sums.
pub fn state_totals() -> BTreeMap<&'static str, Vec<f64>> {
    STATES
        .iter()
        .map(|&s| {
            let v = (0..DAYS).map(|d| (cases(d, s, "f") + cases(d, s, "m")) as f64).collect();
            (s, v)
        })
        .collect()
}

/// Drop the trailing timings object so two runs compare byte for byte.
pub fn without_timings(json: &str) -> &str {
    let at = json.find(",\"timings_ms\"").expect("result carries timings");
    &json[..at]
}
