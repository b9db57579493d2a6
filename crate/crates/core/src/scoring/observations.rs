use std::path::Path;

use crate::error::{Error, Result};
use crate::io::{parse_pgm, write_pgm, GrayImage};
use crate::proposals::Category;
use crate::render::{views_from_json, views_to_json, View};

/// Observed maps for one view. Depth in meters, `INFINITY` where missing;
/// confidences per pixel per category, in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ViewObservation {
    pub depth: Vec<f32>,
    /// `confidence[pixel * Category::COUNT + category]`.
    pub confidence: Vec<f32>,
}

impl ViewObservation {
    pub fn confidence_at(&self, pixel: usize, category: Category) -> f32 {
        self.confidence[pixel * Category::COUNT + category.index()]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObservationSet {
    pub views: Vec<View>,
    pub maps: Vec<ViewObservation>,
}

/// Millimetre code of a depth; 0 encodes missing or out of range.
pub fn depth_code(meters: f64) -> u16 {
    if !meters.is_finite() || meters <= 0.0 {
        return 0;
    }
    let mm = (meters * 1000.0).round();
    if (1.0..=65535.0).contains(&mm) {
        mm as u16
    } else {
        0
    }
}

pub fn depth_from_code(code: u16) -> f32 {
    if code == 0 {
        f32::INFINITY
    } else {
        (code as f64 / 1000.0) as f32
    }
}

pub fn confidence_code(c: f64) -> u8 {
    (c.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub fn confidence_from_code(code: u8) -> f32 {
    (code as f64 / 255.0) as f32
}

impl ObservationSet {
    /// Builds observations from raw maps, quantizing exactly as the on-disk
    /// format does so in-memory and reloaded sets score identically.
    pub fn from_raw(views: Vec<View>, depth: Vec<Vec<f64>>, confidence: Vec<Vec<f64>>) -> Result<Self> {
        if depth.len() != views.len() || confidence.len() != views.len() {
            return Err(Error::Observation("one depth and confidence map per view".into()));
        }
        let mut maps = Vec::with_capacity(views.len());
        for (k, v) in views.iter().enumerate() {
            let n = v.pixel_count();
            if depth[k].len() != n || confidence[k].len() != n * Category::COUNT {
                return Err(Error::Observation(format!("view {k}: map size mismatch")));
            }
            maps.push(ViewObservation {
                depth: depth[k].iter().map(|&d| depth_from_code(depth_code(d))).collect(),
                confidence: confidence[k]
                    .iter()
                    .map(|&c| confidence_from_code(confidence_code(c)))
                    .collect(),
            });
        }
        Ok(Self { views, maps })
    }

    fn depth_file(k: usize) -> String {
        format!("view_{k:03}_depth.pgm")
    }

    fn confidence_file(k: usize, c: Category) -> String {
        format!("view_{k:03}_{}.pgm", c.name())
    }

    /// Writes `views.json` into `root` and the maps into `root/obs`.
    pub fn save(&self, root: &Path) -> Result<()> {
        std::fs::create_dir_all(root.join("obs"))?;
        std::fs::write(root.join("views.json"), views_to_json(&self.views))?;
        for (k, (view, map)) in self.views.iter().zip(&self.maps).enumerate() {
            let depth = GrayImage {
                width: view.width,
                height: view.height,
                maxval: 65535,
                data: map.depth.iter().map(|&d| depth_code(d as f64)).collect(),
            };
            std::fs::write(root.join("obs").join(Self::depth_file(k)), write_pgm(&depth))?;
            for c in Category::ALL {
                let img = GrayImage {
                    width: view.width,
                    height: view.height,
                    maxval: 255,
                    data: (0..view.pixel_count())
                        .map(|i| confidence_code(map.confidence_at(i, c) as f64) as u16)
                        .collect(),
                };
                std::fs::write(root.join("obs").join(Self::confidence_file(k, c)), write_pgm(&img))?;
            }
        }
        Ok(())
    }

    pub fn load(root: &Path) -> Result<Self> {
        let views = views_from_json(&std::fs::read_to_string(root.join("views.json"))?)?;
        let mut maps = Vec::with_capacity(views.len());
        for (k, view) in views.iter().enumerate() {
            let read = |name: String| -> Result<GrayImage> {
                let img = parse_pgm(&std::fs::read(root.join("obs").join(&name))?)?;
                if img.width != view.width || img.height != view.height {
                    return Err(Error::Observation(format!(
                        "{name} is {}x{}, view is {}x{}",
                        img.width, img.height, view.width, view.height
                    )));
                }
                Ok(img)
            };
            let d = read(Self::depth_file(k))?;
            if d.maxval != 65535 {
                return Err(Error::Observation("depth maps must be 16-bit".into()));
            }
            let mut confidence = vec![0.0f32; view.pixel_count() * Category::COUNT];
            for c in Category::ALL {
                let img = read(Self::confidence_file(k, c))?;
                if img.maxval != 255 {
                    return Err(Error::Observation("confidence maps must be 8-bit".into()));
                }
                for (i, &v) in img.data.iter().enumerate() {
                    confidence[i * Category::COUNT + c.index()] = confidence_from_code(v as u8);
                }
            }
            maps.push(ViewObservation {
                depth: d.data.iter().map(|&c| depth_from_code(c)).collect(),
                confidence,
            });
        }
        Ok(Self { views, maps })
    }
}
