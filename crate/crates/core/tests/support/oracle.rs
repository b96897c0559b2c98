//! Brute-force reference for the HSI-planes → interest-points chain.
//!
//! Regions come from repeated min-label relaxation instead of a flood fill,
//! areas from counting, and peaks from an exhaustive scan that checks the
//! distance to every earlier pick. Nothing here calls the library beyond the
//! plane and config types.

#![allow(dead_code)]

use phonecam_core::imaging::HsiPlanes;

pub struct OracleOutput {
    /// Per channel (hue, saturation, intensity): for each pixel, the smallest
    /// pixel index in its region.
    pub partitions: [Vec<usize>; 3],
    pub uncommon: [Vec<f64>; 3],
    pub interest: Vec<f64>,
    /// `(x, y, score)` in rank order.
    pub points: Vec<(u32, u32, f64)>,
}

pub fn bins(planes: &HsiPlanes, bin_count: u16) -> [Vec<u16>; 3] {
    let n = bin_count as usize;
    let linear = |v: f64| -> u16 {
        let mut b = 0usize;
        // largest b with b/n <= v, capped at n-1
        while b + 1 < n && v * n as f64 >= (b + 1) as f64 {
            b += 1;
        }
        b as u16
    };
    let sector = 360.0 / n as f64;
    let hue = planes
        .hue
        .iter()
        .zip(&planes.achromatic)
        .map(|(&h, &gray)| if gray { n as u16 } else { ((h / sector).floor() as usize % n) as u16 })
        .collect();
    [
        hue,
        planes.saturation.iter().map(|&v| linear(v)).collect(),
        planes.intensity.iter().map(|&v| linear(v)).collect(),
    ]
}

pub fn regions(bins: &[u16], w: usize, h: usize) -> Vec<usize> {
    let mut label: Vec<usize> = (0..w * h).collect();
    loop {
        let mut changed = false;
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                let mut neighbours = Vec::with_capacity(4);
                if x > 0 {
                    neighbours.push(i - 1);
                }
                if x + 1 < w {
                    neighbours.push(i + 1);
                }
                if y > 0 {
                    neighbours.push(i - w);
                }
                if y + 1 < h {
                    neighbours.push(i + w);
                }
                for j in neighbours {
                    if bins[j] == bins[i] && label[j] < label[i] {
                        label[i] = label[j];
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            return label;
        }
    }
}

pub fn uncommon(partition: &[usize]) -> Vec<f64> {
    let n = partition.len();
    partition
        .iter()
        .map(|&l| {
            let area = partition.iter().filter(|&&m| m == l).count();
            1.0 - area as f64 / n as f64
        })
        .collect()
}

pub fn peaks(map: &[f64], w: usize, k: u32, suppress_radius: u32) -> Vec<(u32, u32, f64)> {
    let r2 = (suppress_radius as i64).pow(2);
    let mut picked: Vec<usize> = Vec::new();
    let mut out = Vec::new();
    for _ in 0..k {
        let allowed = |i: usize| {
            picked.iter().all(|&p| {
                let dx = (i % w) as i64 - (p % w) as i64;
                let dy = (i / w) as i64 - (p / w) as i64;
                p != i && dx * dx + dy * dy >= r2
            })
        };
        let mut best: Option<usize> = None;
        for i in 0..map.len() {
            if allowed(i) && best.is_none_or(|b| map[i] > map[b]) {
                best = Some(i);
            }
        }
        let (idx, score) = match best {
            Some(i) => (i, map[i]),
            None => match (0..map.len()).find(|i| !picked.contains(i)) {
                Some(i) => (i, 0.0),
                None => break,
            },
        };
        picked.push(idx);
        out.push(((idx % w) as u32, (idx / w) as u32, score));
    }
    out
}

/// Runs the reference chain with no smoothing.
pub fn run(planes: &HsiPlanes, bin_count: u16, k: u32, suppress_radius: u32) -> OracleOutput {
    let (w, h) = (planes.width as usize, planes.height as usize);
    let [hb, sb, ib] = bins(planes, bin_count);
    let partitions = [regions(&hb, w, h), regions(&sb, w, h), regions(&ib, w, h)];
    let uncommon = [
        uncommon(&partitions[0]),
        uncommon(&partitions[1]),
        uncommon(&partitions[2]),
    ];
    let interest: Vec<f64> = (0..w * h)
        .map(|i| uncommon[0][i] + uncommon[1][i] + uncommon[2][i])
        .collect();
    let points = peaks(&interest, w, k, suppress_radius);
    OracleOutput {
        partitions,
        uncommon,
        interest,
        points,
    }
}

/// The library's partition in the oracle's canonical form.
pub fn canonical(labels: &[u32]) -> Vec<usize> {
    let mut first = std::collections::HashMap::new();
    labels
        .iter()
        .enumerate()
        .map(|(i, l)| *first.entry(*l).or_insert(i))
        .collect()
}
