//! Static SVG rendering of accuracy–latency curves. Output is plain
//! text, deterministic for identical inputs, and needs no renderer
//! beyond a browser.

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 60.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 36.0;
const MARGIN_BOTTOM: f64 = 48.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

/// Renders one polyline per series; points are (latency seconds,
/// accuracy in [0,1]). The x-axis spans [0, max latency] (at least one
/// second), the y-axis [0, 1].
pub fn render_curves_svg(series: &[(String, Vec<(f64, f64)>)], title: &str) -> String {
    let max_lat = series
        .iter()
        .flat_map(|(_, pts)| pts.iter().map(|p| p.0))
        .fold(1.0f64, f64::max);

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let x = |lat: f64| MARGIN_LEFT + plot_w * (lat / max_lat);
    let y = |acc: f64| MARGIN_TOP + plot_h * (1.0 - acc);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"monospace\" font-size=\"12\">\n"
    ));
    svg.push_str(&format!(
        "  <text x=\"{:.1}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
        WIDTH / 2.0,
        escape(title)
    ));

    // Axes.
    svg.push_str(&format!(
        "  <line x1=\"{l:.1}\" y1=\"{b:.1}\" x2=\"{r:.1}\" y2=\"{b:.1}\" stroke=\"black\"/>\n",
        l = MARGIN_LEFT,
        r = WIDTH - MARGIN_RIGHT,
        b = HEIGHT - MARGIN_BOTTOM
    ));
    svg.push_str(&format!(
        "  <line x1=\"{l:.1}\" y1=\"{t:.1}\" x2=\"{l:.1}\" y2=\"{b:.1}\" stroke=\"black\"/>\n",
        l = MARGIN_LEFT,
        t = MARGIN_TOP,
        b = HEIGHT - MARGIN_BOTTOM
    ));

    // Ticks: five per axis.
    for i in 0..=5 {
        let frac = i as f64 / 5.0;
        let tx = x(frac * max_lat);
        svg.push_str(&format!(
            "  <line x1=\"{tx:.1}\" y1=\"{b:.1}\" x2=\"{tx:.1}\" y2=\"{b2:.1}\" stroke=\"black\"/>\n",
            b = HEIGHT - MARGIN_BOTTOM,
            b2 = HEIGHT - MARGIN_BOTTOM + 5.0
        ));
        svg.push_str(&format!(
            "  <text x=\"{tx:.1}\" y=\"{ty:.1}\" text-anchor=\"middle\">{v:.2}</text>\n",
            ty = HEIGHT - MARGIN_BOTTOM + 18.0,
            v = frac * max_lat
        ));
        let ty = y(frac);
        svg.push_str(&format!(
            "  <line x1=\"{x1:.1}\" y1=\"{ty:.1}\" x2=\"{x2:.1}\" y2=\"{ty:.1}\" stroke=\"black\"/>\n",
            x1 = MARGIN_LEFT - 5.0,
            x2 = MARGIN_LEFT
        ));
        svg.push_str(&format!(
            "  <text x=\"{tx:.1}\" y=\"{ty2:.1}\" text-anchor=\"end\">{frac:.1}</text>\n",
            tx = MARGIN_LEFT - 8.0,
            ty2 = ty + 4.0
        ));
    }
    svg.push_str(&format!(
        "  <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">mean latency (s)</text>\n",
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 10.0
    ));
    svg.push_str(&format!(
        "  <text x=\"14\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 14 {0:.1})\">accuracy</text>\n",
        MARGIN_TOP + plot_h / 2.0
    ));

    for (idx, (name, pts)) in series.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        if !pts.is_empty() {
            let path: Vec<String> = pts
                .iter()
                .map(|&(lat, acc)| format!("{:.2},{:.2}", x(lat), y(acc)))
                .collect();
            svg.push_str(&format!(
                "  <polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
                path.join(" ")
            ));
        }
        let ly = MARGIN_TOP + 14.0 * idx as f64;
        svg.push_str(&format!(
            "  <rect x=\"{lx:.1}\" y=\"{ry:.1}\" width=\"10\" height=\"10\" fill=\"{color}\"/>\n",
            lx = WIDTH - MARGIN_RIGHT - 150.0,
            ry = ly
        ));
        svg.push_str(&format!(
            "  <text x=\"{tx:.1}\" y=\"{ty:.1}\">{}</text>\n",
            escape(name),
            tx = WIDTH - MARGIN_RIGHT - 135.0,
            ty = ly + 9.0
        ));
    }

    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
