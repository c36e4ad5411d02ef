//! Deterministic SVG emission for periodgons, star domains, and phase
//! portraits. Identical inputs produce byte-identical documents: fixed
//! decimal formatting, fixed element order, no timestamps.

use num_complex::Complex64 as Cx;
use polyvf_core::flow::{Landing, SeparatrixGraph};
use polyvf_core::periodgon::{HomoclinicEvent, Periodgon, StarDomain};

#[derive(Debug)]
pub struct EmptyScene;

impl std::fmt::Display for EmptyScene {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "scene contains no drawable geometry")
    }
}

fn fmt(v: f64) -> String {
    // Fixed precision keeps documents byte-stable across platforms.
    let s = format!("{v:.6}");
    if s == "-0.000000" {
        "0.000000".to_string()
    } else {
        s
    }
}

struct Bounds {
    min: Cx,
    max: Cx,
}

impl Bounds {
    fn of(points: impl Iterator<Item = Cx>) -> Option<Bounds> {
        let mut min = Cx::new(f64::INFINITY, f64::INFINITY);
        let mut max = Cx::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        let mut any = false;
        for p in points {
            any = true;
            min = Cx::new(min.re.min(p.re), min.im.min(p.im));
            max = Cx::new(max.re.max(p.re), max.im.max(p.im));
        }
        if any {
            Some(Bounds { min, max })
        } else {
            None
        }
    }

    /// viewBox with a 5% margin; y is flipped so the complex plane reads
    /// the usual way.
    fn view_box(&self) -> String {
        let w = (self.max.re - self.min.re).max(1e-9);
        let h = (self.max.im - self.min.im).max(1e-9);
        let m = 0.05 * w.max(h);
        format!(
            "{} {} {} {}",
            fmt(self.min.re - m),
            fmt(-(self.max.im + m)),
            fmt(w + 2.0 * m),
            fmt(h + 2.0 * m)
        )
    }

    fn stroke(&self) -> f64 {
        let w = (self.max.re - self.min.re).max(1e-9);
        let h = (self.max.im - self.min.im).max(1e-9);
        0.004 * w.max(h)
    }
}

fn pt(z: Cx) -> String {
    format!("{},{}", fmt(z.re), fmt(-z.im))
}

fn document(view_box: &str, body: &str) -> String {
    format!(
        concat!(
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n",
            "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{}\">\n",
            "<defs>\n",
            "<marker id=\"arrow\" viewBox=\"0 0 10 10\" refX=\"8\" refY=\"5\" ",
            "markerWidth=\"5\" markerHeight=\"5\" orient=\"auto-start-reverse\">\n",
            "<path d=\"M 0 0 L 10 5 L 0 10 z\"/>\n",
            "</marker>\n",
            "</defs>\n",
            "{}",
            "</svg>\n"
        ),
        view_box, body
    )
}

fn polyline_path(points: &[Cx]) -> String {
    let mut d = String::new();
    for (i, z) in points.iter().enumerate() {
        d.push_str(if i == 0 { "M " } else { "L " });
        d.push_str(&pt(*z));
        d.push(' ');
    }
    d
}

/// Periodgon: oriented sides with arrowheads, vertices, and highlighted
/// homoclinic chords.
pub fn render_periodgon(pg: &Periodgon, events: &[HomoclinicEvent]) -> Result<String, EmptyScene> {
    if pg.vertices.is_empty() {
        return Err(EmptyScene);
    }
    let bounds = Bounds::of(pg.vertices.iter().cloned()).ok_or(EmptyScene)?;
    let sw = bounds.stroke();
    let mut body = String::new();
    let n = pg.vertices.len();
    let vert = |i: isize| -> Cx {
        let m = n as isize;
        pg.vertices[(((i % m) + m) % m) as usize]
    };
    for (p, q) in events.iter().map(|e| e.pair).collect::<std::collections::BTreeSet<_>>() {
        body.push_str(&format!(
            "<path d=\"M {} L {}\" stroke=\"#d62728\" stroke-width=\"{}\" fill=\"none\" stroke-dasharray=\"{} {}\"/>\n",
            pt(pg.vertices[p]),
            pt(pg.vertices[q]),
            fmt(sw),
            fmt(3.0 * sw),
            fmt(2.0 * sw),
        ));
    }
    for i in 0..n {
        let a = vert(i as isize - 1);
        let b = vert(i as isize);
        body.push_str(&format!(
            "<path d=\"M {} L {}\" stroke=\"#1f77b4\" stroke-width=\"{}\" fill=\"none\" marker-end=\"url(#arrow)\"/>\n",
            pt(a),
            pt(b),
            fmt(1.5 * sw),
        ));
    }
    for v in &pg.vertices {
        body.push_str(&format!(
            "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"#000000\"/>\n",
            fmt(v.re),
            fmt(-v.im),
            fmt(1.6 * sw),
        ));
    }
    Ok(document(&bounds.view_box(), &body))
}

/// Star domain: the periodgon plus its truncated exterior half-strips.
pub fn render_star(star: &StarDomain, truncation: f64) -> Result<String, EmptyScene> {
    let quads: Vec<[Cx; 4]> = (0..star.strips.len())
        .map(|i| star.strip_quad(i, truncation))
        .collect();
    let bounds = Bounds::of(
        star.base
            .vertices
            .iter()
            .cloned()
            .chain(quads.iter().flat_map(|q| q.iter().cloned())),
    )
    .ok_or(EmptyScene)?;
    let sw = bounds.stroke();
    let mut body = String::new();
    for q in &quads {
        body.push_str(&format!(
            "<path d=\"M {} L {} L {} L {} Z\" fill=\"#aec7e8\" fill-opacity=\"0.35\" stroke=\"#1f77b4\" stroke-width=\"{}\"/>\n",
            pt(q[0]),
            pt(q[1]),
            pt(q[2]),
            pt(q[3]),
            fmt(0.6 * sw),
        ));
    }
    let mut d = polyline_path(&star.base.vertices);
    d.push('Z');
    body.push_str(&format!(
        "<path d=\"{}\" fill=\"#ffbb78\" fill-opacity=\"0.5\" stroke=\"#ff7f0e\" stroke-width=\"{}\"/>\n",
        d,
        fmt(sw),
    ));
    Ok(document(&bounds.view_box(), &body))
}

/// Phase portrait: separatrices of infinity with landing colors, the
/// equilibria, and the trace circle.
pub fn render_portrait(graph: &SeparatrixGraph) -> Result<String, EmptyScene> {
    if graph.seps.is_empty() {
        return Err(EmptyScene);
    }
    let bounds = Bounds::of(
        graph
            .roots
            .iter()
            .cloned()
            .chain([Cx::new(graph.radius, graph.radius), -Cx::new(graph.radius, graph.radius)]),
    )
    .ok_or(EmptyScene)?;
    let sw = bounds.stroke();
    let mut body = String::new();
    body.push_str(&format!(
        "<circle cx=\"0.000000\" cy=\"0.000000\" r=\"{}\" fill=\"none\" stroke=\"#cccccc\" stroke-width=\"{}\"/>\n",
        fmt(graph.radius),
        fmt(0.5 * sw),
    ));
    for s in &graph.seps {
        let color = match s.landing {
            Landing::Root(_) => {
                if s.incoming {
                    "#2ca02c"
                } else {
                    "#9467bd"
                }
            }
            Landing::Reexit { .. } => "#d62728",
            Landing::Unresolved { .. } => "#7f7f7f",
        };
        // Decimate long polylines deterministically.
        let pts: Vec<Cx> = decimate(&s.traj.samples, 400);
        body.push_str(&format!(
            "<path d=\"{}\" stroke=\"{}\" stroke-width=\"{}\" fill=\"none\"/>\n",
            polyline_path(&pts),
            color,
            fmt(sw),
        ));
    }
    for r in &graph.roots {
        body.push_str(&format!(
            "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"#000000\"/>\n",
            fmt(r.re),
            fmt(-r.im),
            fmt(1.8 * sw),
        ));
    }
    Ok(document(&bounds.view_box(), &body))
}

fn decimate(samples: &[(f64, Cx)], max_points: usize) -> Vec<Cx> {
    if samples.len() <= max_points {
        return samples.iter().map(|&(_, z)| z).collect();
    }
    let stride = samples.len().div_ceil(max_points);
    let mut pts: Vec<Cx> = samples.iter().step_by(stride).map(|&(_, z)| z).collect();
    if let Some(&(_, last)) = samples.last() {
        if pts.last() != Some(&last) {
            pts.push(last);
        }
    }
    pts
}
