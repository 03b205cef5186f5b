//! Scalp-map rendering as plain SVG text.
//!
//! One `<circle class="electrode ...">` per montage electrode, placed at its
//! grid cell. Electrodes whose cell carries mass are `active`, with radius
//! and opacity growing with mass relative to the map maximum; the rest are
//! `idle`. Numbers are printed with fixed precision so equal inputs give
//! equal bytes.

use std::fmt::Write as _;

use scalpemd::montage::{GridLayout, MontageError, SpatialMap};
use scalpemd::Real;

const CELL: f64 = 40.0;
const MARGIN: f64 = 30.0;
const IDLE_RADIUS: f64 = 7.0;
const MAX_EXTRA_RADIUS: f64 = 11.0;

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

pub fn render_svg<T: Real>(map: &SpatialMap<T>, layout: &GridLayout, title: Option<&str>) -> Result<String, MontageError> {
    let n = layout.order();
    if map.order() != n {
        return Err(MontageError::OrderMismatch(map.order(), n));
    }
    let peak = map.as_slice().iter().fold(0.0f64, |m, v| m.max(v.as_f64()));
    let title_h = if title.is_some() { 24.0 } else { 0.0 };
    let side = n as f64 * CELL + 2.0 * MARGIN;
    let (width, height) = (side, side + title_h);
    let centre = (MARGIN + n as f64 * CELL / 2.0, title_h + MARGIN + n as f64 * CELL / 2.0);

    let mut s = String::new();
    // writing to a String cannot fail
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}">"#
    );
    let _ = writeln!(
        s,
        "<style>.idle{{fill:#ffffff;stroke:#606060}}.active{{fill:#c0392b;stroke:#7b241c}}text{{font-family:sans-serif;font-size:9px;text-anchor:middle}}</style>"
    );
    if let Some(t) = title {
        let _ = writeln!(
            s,
            r#"<text class="title" x="{:.1}" y="18" style="font-size:14px">{}</text>"#,
            width / 2.0,
            escape(t)
        );
    }
    let _ = writeln!(
        s,
        r##"<circle class="head" cx="{:.1}" cy="{:.1}" r="{:.1}" fill="none" stroke="#909090"/>"##,
        centre.0,
        centre.1,
        n as f64 * CELL / 2.0 + 4.0
    );
    for e in layout.electrodes() {
        let mass = map.get(e.row, e.col).as_f64();
        let cx = MARGIN + (e.col as f64 + 0.5) * CELL;
        let cy = title_h + MARGIN + (e.row as f64 + 0.5) * CELL;
        if mass > 0.0 {
            let frac = mass / peak;
            let _ = writeln!(
                s,
                r#"<circle class="electrode active" data-name="{}" data-mass="{mass}" cx="{cx:.1}" cy="{cy:.1}" r="{:.2}" fill-opacity="{:.3}"/>"#,
                escape(&e.name),
                IDLE_RADIUS + MAX_EXTRA_RADIUS * frac,
                0.35 + 0.65 * frac
            );
        } else {
            let _ = writeln!(
                s,
                r#"<circle class="electrode idle" data-name="{}" data-mass="0" cx="{cx:.1}" cy="{cy:.1}" r="{IDLE_RADIUS:.2}"/>"#,
                escape(&e.name)
            );
        }
        let _ = writeln!(s, r#"<text x="{cx:.1}" y="{:.1}">{}</text>"#, cy + 3.0, escape(&e.name));
    }
    s.push_str("</svg>\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use scalpemd::montage::binary_map;

    #[test]
    fn title_is_escaped() {
        let layout = GridLayout::physionet64();
        let map = SpatialMap::<f64>::zeros(layout.order());
        let svg = render_svg(&map, &layout, Some("a<b & \"c\"")).unwrap();
        assert!(svg.contains("a&lt;b &amp; &quot;c&quot;"));
    }

    #[test]
    fn larger_mass_draws_larger_marker() {
        let layout = GridLayout::physionet64();
        let mut map: SpatialMap<f64> = binary_map(["C3", "C4"], &layout).unwrap();
        map = SpatialMap::from_row_major(
            map.order(),
            map.as_slice()
                .iter()
                .enumerate()
                .map(|(i, &v)| if i == 5 * 11 + 3 { 3.0 * v } else { v })
                .collect(),
        )
        .unwrap();
        let svg = render_svg(&map, &layout, None).unwrap();
        assert!(svg.contains(r#"data-name="C3" data-mass="3" cx="170.0" cy="250.0" r="18.00""#), "{svg}");
        assert!(svg.contains(r#"data-name="C4" data-mass="1""#));
    }

    #[test]
    fn order_mismatch_rejected() {
        let layout = GridLayout::physionet64();
        assert!(render_svg(&SpatialMap::<f64>::zeros(5), &layout, None).is_err());
    }
}
