use std::fmt::Write as _;

use crate::Point;

const SIZE: f64 = 640.0;
const MARGIN: f64 = 40.0;

/// Scatter of estimated (red) against true (gray) MPs with a meter grid.
pub fn trajectory_svg(estimate: &[Point], truth: &[Option<Point>], aps: &[Point]) -> String {
    let all: Vec<Point> = estimate
        .iter()
        .copied()
        .chain(truth.iter().flatten().copied())
        .chain(aps.iter().copied())
        .filter(|p| p.is_finite())
        .collect();
    let (mut lo, mut hi) = (Point::new(0.0, 0.0), Point::new(1.0, 1.0));
    if let Some(first) = all.first() {
        lo = *first;
        hi = *first;
        for p in &all {
            lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
        }
    }
    let span = (hi.x - lo.x).max(hi.y - lo.y).max(1.0);
    let scale = (SIZE - 2.0 * MARGIN) / span;
    let px = |p: Point| (MARGIN + (p.x - lo.x) * scale, SIZE - MARGIN - (p.y - lo.y) * scale);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}" font-family="sans-serif" font-size="11">"#
    );
    s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    let step = [1.0, 2.0, 5.0, 10.0, 20.0, 50.0].into_iter().find(|t| span / t <= 10.0).unwrap_or(100.0);
    let mut v = (lo.x / step).ceil() * step;
    while v <= lo.x + span + 1e-9 {
        let (x, _) = px(Point::new(v, lo.y));
        let _ = writeln!(s, r##"<line x1="{x:.1}" y1="{MARGIN}" x2="{x:.1}" y2="{:.1}" stroke="#eee"/><text x="{x:.1}" y="{:.1}" text-anchor="middle">{v}</text>"##, SIZE - MARGIN, SIZE - MARGIN + 14.0);
        v += step;
    }
    let mut v = (lo.y / step).ceil() * step;
    while v <= lo.y + span + 1e-9 {
        let (_, y) = px(Point::new(lo.x, v));
        let _ = writeln!(s, r##"<line x1="{MARGIN}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#eee"/><text x="{:.1}" y="{y:.1}" text-anchor="end">{v}</text>"##, SIZE - MARGIN, MARGIN - 4.0);
        v += step;
    }
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">x (m)</text>"#, SIZE / 2.0, SIZE - 8.0);

    let polyline = |pts: &mut dyn Iterator<Item = Point>, color: &str| {
        let coords: Vec<String> = pts.map(&px).map(|(x, y)| format!("{x:.1},{y:.1}")).collect();
        format!(r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, coords.join(" ")) + "\n"
    };
    s.push_str(&polyline(&mut truth.iter().flatten().copied(), "#999"));
    s.push_str(&polyline(&mut estimate.iter().copied(), "#d33"));
    for p in estimate {
        let (x, y) = px(*p);
        let _ = writeln!(s, r##"<circle cx="{x:.1}" cy="{y:.1}" r="2.5" fill="#d33"/>"##);
    }
    for p in aps {
        let (x, y) = px(*p);
        let _ = writeln!(s, r##"<rect x="{:.1}" y="{:.1}" width="8" height="8" fill="#36c"/>"##, x - 4.0, y - 4.0);
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn well_formed() {
        let est = [Point::new(0.0, 0.0), Point::new(3.0, 1.0)];
        let truth = [Some(Point::new(0.0, 0.5)), None];
        let svg = trajectory_svg(&est, &truth, &[Point::new(5.0, 5.0)]);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<circle").count(), 2);
    }
}
