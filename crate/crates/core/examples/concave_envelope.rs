//! Upper concave envelope of a point cloud, as used for time sharing.

use crfade::optimize::concave_envelope;

fn main() {
    let points = [(0.0, 0.0), (0.2, 0.5), (0.4, 0.55), (0.5, 0.9), (0.8, 1.0), (1.0, 0.95)];
    for (x, y) in concave_envelope(&points) {
        println!("{x:.2} {y:.2}");
    }
}
