//! Procedurally drawn charts with tagged summaries, for tests, fixtures and
//! desk-scale experiments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{
    parse_tagged, split_corpus, ChartCategory, ChartRecord, Corpus, ImageRef, Split, TagVocabulary,
};
use crate::error::Result;
use crate::raster::RgbImage;

/// Side of rendered charts; matches the jigsaw canvas so no resampling is
/// needed before cutting tiles.
pub const SYNTH_SIDE: usize = 234;

const MEASURES: [&str; 6] = [
    "revenue",
    "rainfall",
    "population",
    "sales",
    "energy use",
    "temperature",
];
const DIMENSIONS: [&str; 4] = ["year", "month", "region", "quarter"];
const COLORS: [(&str, [u8; 3]); 5] = [
    ("red", [200, 40, 40]),
    ("blue", [40, 70, 200]),
    ("green", [30, 150, 60]),
    ("orange", [230, 130, 20]),
    ("purple", [130, 50, 170]),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Trend {
    Rising,
    Falling,
    Peak,
}

impl Trend {
    fn phrase(self) -> &'static str {
        match self {
            Trend::Rising => "rises steadily",
            Trend::Falling => "falls steadily",
            Trend::Peak => "rises to a peak and then falls",
        }
    }
}

/// Everything needed to draw and describe one chart.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthChart {
    pub category: ChartCategory,
    pub values: Vec<f64>,
    pub trend: Trend,
    pub measure: usize,
    pub dimension: usize,
    pub color: usize,
}

impl SynthChart {
    pub fn random(category: ChartCategory, rng: &mut impl Rng) -> Self {
        let trend = match rng.random_range(0..3) {
            0 => Trend::Rising,
            1 => Trend::Falling,
            _ => Trend::Peak,
        };
        let n = rng.random_range(5..=8);
        let values = (0..n)
            .map(|i| {
                let u = i as f64 / (n - 1) as f64;
                let base = match trend {
                    Trend::Rising => 0.2 + 0.65 * u,
                    Trend::Falling => 0.85 - 0.65 * u,
                    Trend::Peak => 0.2 + 0.7 * (1.0 - (2.0 * u - 1.0).abs()),
                };
                (base + rng.random_range(-0.04..0.04)).clamp(0.05, 0.95)
            })
            .collect();
        Self {
            category,
            values,
            trend,
            measure: rng.random_range(0..MEASURES.len()),
            dimension: rng.random_range(0..DIMENSIONS.len()),
            color: rng.random_range(0..COLORS.len()),
        }
    }

    fn peak_index(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = i;
            }
        }
        best
    }

    /// Summary markup with two L1 and two L2/L3 sentences.
    pub fn markup(&self) -> String {
        let measure = MEASURES[self.measure];
        let dim = DIMENSIONS[self.dimension];
        let color = COLORS[self.color].0;
        let mut cap = measure.to_string();
        cap[..1].make_ascii_uppercase();
        format!(
            "This <chart_type>{kind} chart</chart_type> shows <axis>{measure} by {dim}</axis>. \
             The values are drawn in <color>{color}</color>. \
             <trend>{cap} {trend}</trend>. \
             <statistics>The highest value is at {dim} {peak}</statistics>.",
            kind = self.category.as_str(),
            trend = self.trend.phrase(),
            peak = self.peak_index() + 1,
        )
    }

    pub fn render(&self, side: usize) -> RgbImage {
        let mut c = Canvas::new(side);
        let rgb = COLORS[self.color].1;
        let (x0, y0, x1, y1) = c.plot_box();
        match self.category {
            ChartCategory::Line => c.polyline(&self.values, (x0, y0, x1, y1), rgb, false),
            ChartCategory::Area => c.polyline(&self.values, (x0, y0, x1, y1), rgb, true),
            ChartCategory::Bar => c.bars(&self.values, (x0, y0, x1, y1), rgb),
            ChartCategory::Scatter => c.scatter(&self.values, (x0, y0, x1, y1), rgb),
            ChartCategory::Multivariate => {
                c.bars(&self.values, (x0, y0, x1, y1), rgb);
                let other: Vec<f64> = self.values.iter().rev().map(|v| 0.9 * v).collect();
                c.polyline(&other, (x0, y0, x1, y1), [20, 20, 20], false);
            }
            ChartCategory::Panel => {
                let mid = (x0 + x1) / 2;
                c.polyline(&self.values, (x0, y0, mid - 6, y1), rgb, false);
                c.vline(mid, y0, y1, [90, 90, 90]);
                let flipped: Vec<f64> = self.values.iter().map(|v| 1.0 - v).collect();
                c.polyline(&flipped, (mid + 6, y0, x1, y1), rgb, false);
            }
            ChartCategory::Pie => c.pie(&self.values, (x0, y0, x1, y1), rgb),
            ChartCategory::Box => c.boxes(&self.values, (x0, y0, x1, y1), rgb),
        }
        c.img
    }
}

/// Drawing surface with a diagonal background gradient, axes and a title
/// bar, so orientation and tile position are visible.
struct Canvas {
    img: RgbImage,
    side: usize,
}

impl Canvas {
    fn new(side: usize) -> Self {
        let mut img = RgbImage::new(side, side);
        let s = side.max(2) as f64 - 1.0;
        for y in 0..side {
            for x in 0..side {
                let r = 250.0 - 90.0 * x as f64 / s;
                let g = 250.0 - 90.0 * y as f64 / s;
                img.put(x, y, [r as u8, g as u8, 215]);
            }
        }
        let mut c = Self { img, side };
        let (x0, y0, x1, y1) = c.plot_box();
        c.rect(x0.saturating_sub(2), y1, x1, y1 + 2, [40, 40, 40]);
        c.rect(x0.saturating_sub(2), y0, x0, y1 + 2, [40, 40, 40]);
        let m = side / 12;
        c.rect(m, m / 3, side / 2, m / 3 + m / 2, [60, 60, 60]);
        c
    }

    fn plot_box(&self) -> (usize, usize, usize, usize) {
        let m = self.side / 10;
        (m + 4, 2 * m, self.side - m, self.side - m)
    }

    fn put(&mut self, x: i64, y: i64, rgb: [u8; 3]) {
        if x >= 0 && y >= 0 && (x as usize) < self.side && (y as usize) < self.side {
            self.img.put(x as usize, y as usize, rgb);
        }
    }

    fn rect(&mut self, x0: usize, y0: usize, x1: usize, y1: usize, rgb: [u8; 3]) {
        for y in y0..y1 {
            for x in x0..x1 {
                self.put(x as i64, y as i64, rgb);
            }
        }
    }

    fn vline(&mut self, x: usize, y0: usize, y1: usize, rgb: [u8; 3]) {
        self.rect(x, y0, x + 2, y1, rgb);
    }

    fn points(values: &[f64], (x0, y0, x1, y1): (usize, usize, usize, usize)) -> Vec<(f64, f64)> {
        let n = values.len().max(2) - 1;
        values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let x = x0 as f64 + (x1 - x0) as f64 * i as f64 / n as f64;
                let y = y1 as f64 - (y1 - y0) as f64 * v;
                (x, y)
            })
            .collect()
    }

    fn polyline(
        &mut self,
        values: &[f64],
        area: (usize, usize, usize, usize),
        rgb: [u8; 3],
        fill: bool,
    ) {
        let pts = Self::points(values, area);
        for w in pts.windows(2) {
            let (ax, ay) = w[0];
            let (bx, by) = w[1];
            let steps = ((bx - ax).abs().max((by - ay).abs()) as usize).max(1);
            for k in 0..=steps {
                let t = k as f64 / steps as f64;
                let x = (ax + t * (bx - ax)).round() as i64;
                let y = (ay + t * (by - ay)).round() as i64;
                if fill {
                    let light = rgb.map(|c| ((c as u16 + 255) / 2) as u8);
                    for yy in y..area.3 as i64 {
                        self.put(x, yy, light);
                    }
                }
                for dy in -1..=1 {
                    for dx in -1..=1 {
                        self.put(x + dx, y + dy, rgb);
                    }
                }
            }
        }
    }

    fn bars(&mut self, values: &[f64], area: (usize, usize, usize, usize), rgb: [u8; 3]) {
        let (x0, _, x1, y1) = area;
        let slot = (x1 - x0) / values.len();
        for (i, (_, y)) in Self::points(values, area).into_iter().enumerate() {
            let left = x0 + i * slot + slot / 6;
            self.rect(left, y as usize, left + slot * 2 / 3, y1, rgb);
        }
    }

    fn scatter(&mut self, values: &[f64], area: (usize, usize, usize, usize), rgb: [u8; 3]) {
        for (x, y) in Self::points(values, area) {
            for dy in -3..=3 {
                for dx in -3..=3 {
                    self.put(x as i64 + dx, y as i64 + dy, rgb);
                }
            }
        }
    }

    fn pie(
        &mut self,
        values: &[f64],
        (x0, y0, x1, y1): (usize, usize, usize, usize),
        rgb: [u8; 3],
    ) {
        let cx = (x0 + x1) as f64 / 2.0;
        let cy = (y0 + y1) as f64 / 2.0;
        let r = ((x1 - x0).min(y1 - y0) as f64) / 2.0;
        let total: f64 = values.iter().sum();
        let mut bounds = Vec::with_capacity(values.len());
        let mut acc = 0.0;
        for v in values {
            acc += v / total;
            bounds.push(acc * std::f64::consts::TAU);
        }
        for y in y0..y1 {
            for x in x0..x1 {
                let dx = x as f64 - cx;
                let dy = y as f64 - cy;
                if dx * dx + dy * dy > r * r {
                    continue;
                }
                let a = dy.atan2(dx).rem_euclid(std::f64::consts::TAU);
                let k = bounds.iter().position(|&b| a <= b).unwrap_or(0);
                let shade = 1.0 - 0.6 * k as f64 / values.len() as f64;
                self.put(
                    x as i64,
                    y as i64,
                    rgb.map(|c| (c as f64 * shade + 255.0 * (1.0 - shade) * 0.3) as u8),
                );
            }
        }
    }

    fn boxes(&mut self, values: &[f64], area: (usize, usize, usize, usize), rgb: [u8; 3]) {
        let (x0, y0, x1, y1) = area;
        let slot = (x1 - x0) / values.len();
        let h = (y1 - y0) as f64;
        for (i, v) in values.iter().enumerate() {
            let mid = x0 + i * slot + slot / 2;
            let top = y1 as f64 - h * (v + 0.05).min(0.98);
            let bottom = y1 as f64 - h * (v - 0.15).max(0.02);
            self.vline(
                mid - 1,
                (top - 0.1 * h).max(y0 as f64) as usize,
                top as usize,
                [40, 40, 40],
            );
            self.vline(
                mid - 1,
                bottom as usize,
                (bottom + 0.1 * h).min(y1 as f64) as usize,
                [40, 40, 40],
            );
            self.rect(
                mid - slot / 3,
                top as usize,
                mid + slot / 3,
                bottom as usize,
                rgb,
            );
        }
    }
}

/// A deterministic synthetic record.
pub fn synth_record(index: usize, seed: u64) -> Result<ChartRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let category = ChartCategory::ALL[index % ChartCategory::ALL.len()];
    let chart = SynthChart::random(category, &mut rng);
    let summary = parse_tagged(&chart.markup(), &TagVocabulary::default())?;
    Ok(ChartRecord {
        id: format!("synth-{index:04}"),
        doi: format!("10.5555/synth.{}", index / 4),
        figure_number: (index % 4) as u32 + 1,
        image: ImageRef::Raster(chart.render(SYNTH_SIDE)),
        caption: format!(
            "Figure {}. {} by {}.",
            index % 4 + 1,
            MEASURES[chart.measure],
            DIMENSIONS[chart.dimension]
        ),
        summary,
        chart_type: category,
        split: Split::Unassigned,
    })
}

/// `n` synthetic records split 80/10/10 with `seed`.
pub fn mini_corpus(n: usize, seed: u64) -> Result<Corpus> {
    let mut records = (0..n)
        .map(|i| synth_record(i, seed))
        .collect::<Result<Vec<_>>>()?;
    let ids: Vec<String> = records.iter().map(|r| r.id.clone()).collect();
    let splits = split_corpus(&ids, seed)?;
    for r in &mut records {
        r.split = splits[&r.id];
    }
    Corpus::new(TagVocabulary::default(), records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{accept_record, Level};

    #[test]
    fn records_are_deterministic_and_valid() {
        let a = synth_record(3, 11).unwrap();
        let b = synth_record(3, 11).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, synth_record(4, 11).unwrap());
        for i in 0..16 {
            let r = synth_record(i, 5).unwrap();
            assert!(accept_record(&r).accepted, "{}", r.summary.text);
            assert_eq!(r.summary.count_level(Level::L1), 2);
            assert_eq!(r.summary.count_level(Level::L2L3), 2);
        }
    }

    #[test]
    fn rendering_is_not_rotation_symmetric() {
        for i in 0..8 {
            let r = synth_record(i, 2).unwrap();
            let img = r.load_image().unwrap();
            assert_eq!(img.width(), SYNTH_SIDE);
            let rot = crate::pretext::rotate_image(&img, 2);
            assert_ne!(img, rot);
        }
    }

    #[test]
    fn corpus_split() {
        let c = mini_corpus(20, 1).unwrap();
        assert_eq!(c.split(Split::Train).len(), 16);
        assert_eq!(c.split(Split::Val).len(), 2);
        assert_eq!(c.split(Split::Test).len(), 2);
    }
}
