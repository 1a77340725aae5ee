use crate::error::{Error, Result};

/// Points in the plane.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    points: Vec<[f64; 2]>,
}

impl PointSet {
    pub fn new(points: Vec<[f64; 2]>) -> Result<Self> {
        if points.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("point coordinates"));
        }
        Ok(Self { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn get(&self, i: usize) -> [f64; 2] {
        self.points[i]
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        distance(self.points[i], self.points[j])
    }
}

pub(crate) fn distance(p: [f64; 2], q: [f64; 2]) -> f64 {
    (p[0] - q[0]).hypot(p[1] - q[1])
}

/// Undirected graph over a point set with edge lengths as edge features.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    points: PointSet,
    edges: Vec<(usize, usize)>,
    edge_feature: Vec<f64>,
    /// Triangles used as third-order hyperedges; `None` means every node
    /// triple is a hyperedge.
    triangles: Option<Vec<[usize; 3]>>,
}

impl Graph {
    /// Builds a graph from undirected edges; each edge is normalized to
    /// `i < j`. Self-loops and duplicates are rejected.
    pub fn new(points: PointSet, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut norm: Vec<(usize, usize)> = Vec::new();
        for (i, j) in edges {
            if i == j {
                return Err(Error::Invalid(format!("self-loop at node {i}")));
            }
            if i.max(j) >= points.len() {
                return Err(Error::Invalid(format!("edge ({i},{j}) references a missing node")));
            }
            norm.push((i.min(j), i.max(j)));
        }
        norm.sort_unstable();
        if let Some(w) = norm.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Invalid(format!("duplicate edge {:?}", w[0])));
        }
        let edge_feature = norm.iter().map(|&(i, j)| points.distance(i, j)).collect();
        Ok(Self {
            points,
            edges: norm,
            edge_feature,
            triangles: None,
        })
    }

    pub(crate) fn with_triangles(mut self, triangles: Vec<[usize; 3]>) -> Self {
        self.triangles = Some(triangles);
        self
    }

    pub fn num_nodes(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_feature(&self) -> &[f64] {
        &self.edge_feature
    }

    pub fn triangles(&self) -> Option<&[[usize; 3]]> {
        self.triangles.as_deref()
    }

    /// Node triples acting as hyperedges: the stored triangles, or all
    /// `i < j < k` triples when none are stored.
    pub fn hyperedges(&self) -> Vec<[usize; 3]> {
        match &self.triangles {
            Some(t) => t.clone(),
            None => {
                let n = self.num_nodes();
                let mut all = Vec::new();
                for i in 0..n {
                    for j in (i + 1)..n {
                        for k in (j + 1)..n {
                            all.push([i, j, k]);
                        }
                    }
                }
                all
            }
        }
    }
}

/// Complete graph: all `n (n - 1) / 2` edges.
pub fn fully_connected(points: &PointSet) -> Result<Graph> {
    let n = points.len();
    if n < 2 {
        return Err(Error::Invalid(format!("fully connected graph needs >= 2 points, got {n}")));
    }
    let edges = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j)));
    Graph::new(points.clone(), edges)
}

/// Sines of the interior angles at the three corners of a triangle, in
/// corner order. A corner with a coincident neighbour has no defined angle
/// and reports 0; the flag is set in that case.
pub fn triangle_sines(p: [[f64; 2]; 3]) -> ([f64; 3], bool) {
    let mut out = [0.0; 3];
    let mut degenerate = false;
    for c in 0..3 {
        let a = p[c];
        let b = p[(c + 1) % 3];
        let d = p[(c + 2) % 3];
        let u = [b[0] - a[0], b[1] - a[1]];
        let v = [d[0] - a[0], d[1] - a[1]];
        let norms = u[0].hypot(u[1]) * v[0].hypot(v[1]);
        if norms == 0.0 {
            degenerate = true;
            continue;
        }
        let cross = u[0] * v[1] - u[1] * v[0];
        out[c] = (cross.abs() / norms).min(1.0);
    }
    (out, degenerate)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(p: &[[f64; 2]]) -> PointSet {
        PointSet::new(p.to_vec()).unwrap()
    }

    #[test]
    fn complete_graph_edge_counts() {
        let three = pts(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        assert_eq!(fully_connected(&three).unwrap().edges().len(), 3);
        let five = pts(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [2.0, 2.0], [3.0, 1.0]]);
        let g = fully_connected(&five).unwrap();
        assert_eq!(g.edges().len(), 10);
        for (&(i, j), &f) in g.edges().iter().zip(g.edge_feature()) {
            let [xi, yi] = five.get(i);
            let [xj, yj] = five.get(j);
            assert_eq!(f, ((xi - xj).powi(2) + (yi - yj).powi(2)).sqrt());
        }
        assert!(fully_connected(&pts(&[[0.0, 0.0]])).is_err());
    }

    #[test]
    fn graph_rejects_loops_and_duplicates() {
        let p = pts(&[[0.0, 0.0], [1.0, 0.0]]);
        assert!(Graph::new(p.clone(), [(0, 0)]).is_err());
        assert!(Graph::new(p.clone(), [(0, 1), (1, 0)]).is_err());
        assert!(Graph::new(p, [(0, 2)]).is_err());
        assert!(PointSet::new(vec![[f64::NAN, 0.0]]).is_err());
    }

    #[test]
    fn right_triangle_sines() {
        let (s, degenerate) = triangle_sines([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        assert!(!degenerate);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s[0] - 1.0).abs() < 1e-15);
        assert!((s[1] - h).abs() < 1e-15 && (s[2] - h).abs() < 1e-15);
    }

    #[test]
    fn degenerate_triangle_sines() {
        let (s, degenerate) = triangle_sines([[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]]);
        assert!(degenerate);
        assert_eq!(s, [0.0, 0.0, 0.0]);
        let (s, degenerate) = triangle_sines([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]);
        assert!(!degenerate);
        assert_eq!(s, [0.0, 0.0, 0.0]);
    }
}
