//! Schematic raster of an observation for agents that want pixels.
//!
//! Objects are drawn in the camera frame, camera at the bottom edge looking
//! up, farthest first.

use std::io::Cursor;

use base64::Engine;
use image::{ImageFormat, Rgb, RgbImage};

use crate::world::{Observation, Shape, TABLE_CENTER};

const SIDE: u32 = 256;
const SCALE: f64 = SIDE as f64 / 160.0;

fn put(img: &mut RgbImage, x: i64, y: i64, c: Rgb<u8>) {
    if x >= 0 && y >= 0 && (x as u32) < SIDE && (y as u32) < SIDE {
        img.put_pixel(x as u32, y as u32, c);
    }
}

pub fn render_png(obs: &Observation) -> Vec<u8> {
    let mut img = RgbImage::from_pixel(SIDE, SIDE, Rgb([200, 200, 190]));
    let cam = obs.camera.position();
    let fx = (TABLE_CENTER.x - cam.x) / cam.dist(TABLE_CENTER);
    let fy = (TABLE_CENTER.y - cam.y) / cam.dist(TABLE_CENTER);
    let mut items: Vec<_> = obs
        .objects()
        .map(|o| {
            let dx = o.position.x - cam.x;
            let dy = o.position.y - cam.y;
            let forward = dx * fx + dy * fy;
            let lateral = dx * fy - dy * fx;
            (forward, lateral, o)
        })
        .collect();
    items.sort_by(|a, b| b.0.total_cmp(&a.0));
    for (forward, lateral, o) in items {
        let cx = SIDE as f64 / 2.0 + lateral * SCALE;
        let cy = SIDE as f64 - forward * SCALE;
        let r = o.footprint_radius() * SCALE;
        let [cr, cg, cb] = o.color.rgb();
        let fill = Rgb([cr, cg, cb]);
        let edge = Rgb([cr / 2, cg / 2, cb / 2]);
        let ri = r.ceil() as i64;
        for dy in -ri..=ri {
            for dx in -ri..=ri {
                let (fxp, fyp) = (dx as f64, dy as f64);
                let d = fxp.hypot(fyp);
                let inside = match o.shape {
                    Shape::Cube => fxp.abs() <= r && fyp.abs() <= r,
                    Shape::Sphere | Shape::Cylinder => d <= r,
                };
                if !inside {
                    continue;
                }
                let border = match o.shape {
                    Shape::Cube => fxp.abs() > r - 1.5 || fyp.abs() > r - 1.5,
                    Shape::Sphere => d > r - 1.5,
                    Shape::Cylinder => d > r - 3.0,
                };
                let c = if border {
                    edge
                } else if o.material == crate::world::Material::Metal && d < r * 0.35 {
                    Rgb([255, 255, 255])
                } else {
                    fill
                };
                put(&mut img, cx as i64 + dx, cy as i64 + dy, c);
            }
        }
    }
    let mut buf = Cursor::new(Vec::new());
    img.write_to(&mut buf, ImageFormat::Png)
        .expect("png encoding to memory");
    buf.into_inner()
}

pub fn render_png_base64(obs: &Observation) -> String {
    base64::engine::general_purpose::STANDARD.encode(render_png(obs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{generate_scene, visible_set, ScenarioCategory};

    #[test]
    fn png_signature_and_determinism() {
        let s = generate_scene(ScenarioCategory::Composite, 2, 4).unwrap();
        let obs = visible_set(&s);
        let a = render_png(&obs);
        assert_eq!(&a[..8], b"\x89PNG\r\n\x1a\n");
        assert_eq!(a, render_png(&obs));
        assert!(!render_png_base64(&obs).is_empty());
    }
}
