use nalgebra::{Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{Intrinsics, Pixel, RigidTransform};
use crate::raster::{DepthMap, FlowField};

/// Relative depth agreement required for a point to count as visible in the
/// other view.
const VISIBILITY_TOL: f64 = 1e-6;
/// Stored for flows whose target lies behind the other camera; far outside
/// any image so consistency checks treat it as out of view.
const OUT_OF_VIEW: f64 = -1e6;
/// Height of the ground plane in `Mixed` scenes (y points down).
pub const GROUND_HEIGHT: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SceneKind {
    /// Spheres scattered in front of the path.
    RandomCloud,
    /// A single slightly tilted wall facing the first camera.
    Plane,
    /// Ground plane plus spheres.
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneConfig {
    pub kind: SceneKind,
    /// Number of spheres.
    pub count: usize,
    /// Depth range, seen from the path cameras, used for placing content.
    pub depth_range: (f64, f64),
    pub width: usize,
    pub height: usize,
    pub intrinsics: Intrinsics,
    /// Approximate share of the first view covered by the moving body.
    pub dynamic_fraction: f64,
    /// World-frame motion of the body per unit of time.
    pub dynamic_motion: RigidTransform,
    pub seed: u64,
}

impl SceneConfig {
    /// 240×180 images, focal length 200 px, spheres between 4 and 30 units.
    pub fn new(kind: SceneKind) -> Self {
        let (width, height) = (240, 180);
        Self {
            kind,
            count: 80,
            depth_range: (4.0, 30.0),
            width,
            height,
            intrinsics: Intrinsics {
                fx: 200.0,
                fy: 200.0,
                cx: (width as f64 - 1.0) / 2.0,
                cy: (height as f64 - 1.0) / 2.0,
            },
            dynamic_fraction: 0.0,
            dynamic_motion: RigidTransform::identity(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (near, far) = self.depth_range;
        if !(near > 0.0 && far > near) {
            return Err(Error::InvalidParameter(format!("bad depth range ({near}, {far})")));
        }
        if !(0.0..1.0).contains(&self.dynamic_fraction) {
            return Err(Error::InvalidParameter("dynamic_fraction must lie in [0, 1)".into()));
        }
        if self.width == 0 || self.height == 0 || !self.intrinsics.fits_image(self.width, self.height) {
            return Err(Error::InvalidParameter("intrinsics do not fit the image".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sphere {
    pub center: Vector3<f64>,
    pub radius: f64,
}

impl Sphere {
    /// Smallest positive ray parameter of the intersection with `o + λ d`.
    #[inline]
    fn intersect(&self, o: &Vector3<f64>, d: &Vector3<f64>) -> Option<f64> {
        let oc = o - self.center;
        let a = d.dot(d);
        let half_b = d.dot(&oc);
        let c = oc.dot(&oc) - self.radius * self.radius;
        let disc = half_b * half_b - a * c;
        if disc < 0.0 {
            return None;
        }
        let sq = disc.sqrt();
        // Stable root pair.
        let q = -(half_b + half_b.signum() * sq);
        let (r1, r2) = if q == 0.0 { (0.0, 0.0) } else { (q / a, c / q) };
        let (lo, hi) = if r1 < r2 { (r1, r2) } else { (r2, r1) };
        if lo > 0.0 {
            Some(lo)
        } else if hi > 0.0 {
            Some(hi)
        } else {
            None
        }
    }
}

/// Points with `normal · X = offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane {
    pub normal: Vector3<f64>,
    pub offset: f64,
}

impl Plane {
    #[inline]
    fn intersect(&self, o: &Vector3<f64>, d: &Vector3<f64>) -> Option<f64> {
        let den = self.normal.dot(d);
        if den == 0.0 {
            return None;
        }
        let l = (self.offset - self.normal.dot(o)) / den;
        (l > 0.0 && l.is_finite()).then_some(l)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    config: SceneConfig,
    spheres: Vec<Sphere>,
    planes: Vec<Plane>,
    /// Moving body at time zero.
    dynamic: Option<Sphere>,
}

/// Exact rasters for an ordered view pair `(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedPair {
    pub intrinsics: Intrinsics,
    pub depth_i: DepthMap,
    pub depth_j: DepthMap,
    /// View i → view j.
    pub flow_fwd: FlowField,
    /// View j → view i.
    pub flow_bwd: FlowField,
    /// Surface pixels of view i that are in view and unoccluded in view j.
    pub covisible_i: Vec<bool>,
    pub covisible_j: Vec<bool>,
    /// Pixels showing the moving body.
    pub dynamic_i: Vec<bool>,
    pub dynamic_j: Vec<bool>,
    /// Maps view-i camera coordinates into view-j camera coordinates.
    pub relative_pose: RigidTransform,
    /// Length of the relative translation.
    pub scale: f64,
}

impl RenderedPair {
    pub fn width(&self) -> usize {
        self.flow_fwd.width()
    }

    pub fn height(&self) -> usize {
        self.flow_fwd.height()
    }
}

#[derive(Debug, Clone, Copy)]
struct Hit {
    depth: f64,
    world: Vector3<f64>,
    dynamic: bool,
}

/// One camera at one instant, with the content it can possibly see.
struct View<'a> {
    pose: RigidTransform,
    inverse: RigidTransform,
    k: &'a Intrinsics,
    spheres: Vec<Sphere>,
    planes: &'a [Plane],
    dynamic: Option<Sphere>,
}

impl View<'_> {
    #[inline]
    fn ray(&self, p: &Pixel) -> Vector3<f64> {
        let x = self.k.normalize(p);
        self.pose.rotation * Vector3::new(x.x, x.y, 1.0)
    }

    /// Nearest surface along the ray through `p`. The ray direction has unit
    /// z in the camera frame, so the ray parameter is the depth.
    fn cast(&self, p: &Pixel) -> Option<Hit> {
        let o = self.pose.translation;
        let d = self.ray(p);
        let mut best: Option<(f64, bool)> = None;
        let mut consider = |l: Option<f64>, dynamic: bool| {
            if let Some(l) = l {
                if best.is_none_or(|(b, _)| l < b) {
                    best = Some((l, dynamic));
                }
            }
        };
        for s in &self.spheres {
            consider(s.intersect(&o, &d), false);
        }
        for pl in self.planes {
            consider(pl.intersect(&o, &d), false);
        }
        if let Some(s) = &self.dynamic {
            consider(s.intersect(&o, &d), true);
        }
        best.map(|(depth, dynamic)| Hit {
            depth,
            world: o + d * depth,
            dynamic,
        })
    }
}

impl Scene {
    /// Places content so that it is visible from the given path cameras.
    pub fn generate(config: &SceneConfig, cameras: &[RigidTransform]) -> Result<Scene> {
        config.validate()?;
        if cameras.is_empty() {
            return Err(Error::Empty("scene generation needs at least one camera"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let k = &config.intrinsics;
        let (near, far) = config.depth_range;
        let (w, h) = (config.width as f64, config.height as f64);
        let first = cameras[0];

        let mut planes = Vec::new();
        match config.kind {
            SceneKind::Plane => {
                let tilt = Vector3::new(rng.random_range(-0.25..0.25), rng.random_range(-0.25..0.25), 0.0);
                let n_cam = nalgebra::Rotation3::new(tilt) * Vector3::new(0.0, 0.0, -1.0);
                let anchor = Vector3::new(0.0, 0.0, 0.5 * (near + far));
                let normal = first.rotation * n_cam;
                planes.push(Plane {
                    normal,
                    offset: normal.dot(&first.transform_point(&anchor)),
                });
            }
            SceneKind::Mixed => planes.push(Plane {
                normal: Vector3::new(0.0, 1.0, 0.0),
                offset: GROUND_HEIGHT,
            }),
            SceneKind::RandomCloud => {}
        }

        let mut spheres = Vec::new();
        if config.kind != SceneKind::Plane {
            let mut attempts = 0;
            while spheres.len() < config.count && attempts < 100 * config.count.max(1) {
                attempts += 1;
                let cam = cameras[rng.random_range(0..cameras.len())];
                let p = Pixel::new(rng.random_range(0.0..w - 1.0), rng.random_range(0.0..h - 1.0));
                let depth = rng.random_range(near..far);
                let radius = depth * rng.random_range(0.04..0.12);
                let center = cam.transform_point(&k.backproject(&p, depth));
                if config.kind == SceneKind::Mixed && center.y > GROUND_HEIGHT - 0.25 * radius {
                    continue;
                }
                let clear = cameras
                    .iter()
                    .all(|c| (c.translation - center).norm() > radius + 0.5 * near);
                if clear {
                    spheres.push(Sphere { center, radius });
                }
            }
        }

        let dynamic = (config.dynamic_fraction > 0.0).then(|| {
            let depth = near + 0.25 * (far - near);
            // Off the image centre, clear of the focus of expansion of forward motion.
            let p = Pixel::new(0.2 * w, 0.35 * h);
            let radius_px = silhouette_radius(&p, config.width, config.height, config.dynamic_fraction);
            let ray = k.backproject(&p, 1.0);
            let center = first.transform_point(&(ray * depth));
            let alpha = (radius_px / k.fx).atan();
            Sphere {
                center,
                radius: depth * ray.norm() * alpha.sin(),
            }
        });

        Ok(Scene {
            config: *config,
            spheres,
            planes,
            dynamic,
        })
    }

    pub fn config(&self) -> &SceneConfig {
        &self.config
    }

    pub fn intrinsics(&self) -> &Intrinsics {
        &self.config.intrinsics
    }

    pub fn spheres(&self) -> &[Sphere] {
        &self.spheres
    }

    pub fn planes(&self) -> &[Plane] {
        &self.planes
    }

    /// Body motion over `dt` time units: `M^dt`.
    pub fn body_motion(&self, dt: i64) -> RigidTransform {
        let step = if dt < 0 {
            self.config.dynamic_motion.inverse()
        } else {
            self.config.dynamic_motion
        };
        (0..dt.unsigned_abs()).fold(RigidTransform::identity(), |acc, _| step * acc)
    }

    fn view(&self, pose: &RigidTransform, time: i64) -> View<'_> {
        let k = &self.config.intrinsics;
        let inverse = pose.inverse();
        let (w, h) = (self.config.width as f64, self.config.height as f64);
        // Inward normals of the four side planes of the viewing frustum.
        let corners = [
            Pixel::new(-0.5, -0.5),
            Pixel::new(w - 0.5, -0.5),
            Pixel::new(w - 0.5, h - 0.5),
            Pixel::new(-0.5, h - 0.5),
        ]
        .map(|p| k.backproject(&p, 1.0));
        let sides: Vec<Vector3<f64>> = (0..4)
            .map(|i| {
                let n = corners[i].cross(&corners[(i + 1) % 4]).normalize();
                if n.z < 0.0 {
                    -n
                } else {
                    n
                }
            })
            .collect();
        let spheres = self
            .spheres
            .iter()
            .filter(|s| {
                let c = inverse.transform_point(&s.center);
                c.z > -s.radius && sides.iter().all(|n| n.dot(&c) >= -s.radius)
            })
            .copied()
            .collect();
        let dynamic = self.dynamic.map(|s| Sphere {
            center: self.body_motion(time).transform_point(&s.center),
            radius: s.radius,
        });
        View {
            pose: *pose,
            inverse,
            k,
            spheres,
            planes: &self.planes,
            dynamic,
        }
    }

    fn pixels(&self) -> impl IndexedParallelIterator<Item = Pixel> + '_ {
        let w = self.config.width;
        (0..w * self.config.height)
            .into_par_iter()
            .map(move |i| Pixel::new((i % w) as f64, (i / w) as f64))
    }

    /// Depth of the nearest surface at every pixel; 0 (invalid) where the ray
    /// escapes to infinity.
    pub fn render_depth(&self, pose: &RigidTransform, time: i64) -> Result<DepthMap> {
        let view = self.view(pose, time);
        let data: Vec<f64> = self.pixels().map(|p| view.cast(&p).map_or(0.0, |h| h.depth)).collect();
        let depth = DepthMap::new(self.config.width, self.config.height, data)?;
        if depth.valid_count() == 0 {
            return Err(Error::EmptyRender);
        }
        Ok(depth)
    }

    /// Renders views `i` and `j` at times 0 and 1.
    pub fn render_pair(&self, pose_i: &RigidTransform, pose_j: &RigidTransform) -> Result<RenderedPair> {
        self.render_pair_at(pose_i, 0, pose_j, 1)
    }

    /// Renders both views at explicit times, which only matter for the
    /// moving body.
    pub fn render_pair_at(
        &self,
        pose_i: &RigidTransform,
        time_i: i64,
        pose_j: &RigidTransform,
        time_j: i64,
    ) -> Result<RenderedPair> {
        let vi = self.view(pose_i, time_i);
        let vj = self.view(pose_j, time_j);
        let (depth_i, flow_fwd, covisible_i, dynamic_i) = self.render_directed(&vi, &vj, time_j - time_i)?;
        let (depth_j, flow_bwd, covisible_j, dynamic_j) = self.render_directed(&vj, &vi, time_i - time_j)?;
        let relative_pose = vj.inverse * vi.pose;
        Ok(RenderedPair {
            intrinsics: self.config.intrinsics,
            depth_i,
            depth_j,
            flow_fwd,
            flow_bwd,
            covisible_i,
            covisible_j,
            dynamic_i,
            dynamic_j,
            scale: relative_pose.translation.norm(),
            relative_pose,
        })
    }

    fn render_directed(
        &self,
        from: &View<'_>,
        to: &View<'_>,
        dt: i64,
    ) -> Result<(DepthMap, FlowField, Vec<bool>, Vec<bool>)> {
        let (w, h) = (self.config.width, self.config.height);
        let k = &self.config.intrinsics;
        let motion = self.body_motion(dt);
        let in_view = |q: &Pixel| q.x >= 0.0 && q.y >= 0.0 && q.x <= (w - 1) as f64 && q.y <= (h - 1) as f64;
        let out = Vector2::new(OUT_OF_VIEW, OUT_OF_VIEW);
        // Identical views: report exactly zero motion instead of round-off.
        let still = from.pose == to.pose && (dt == 0 || self.dynamic.is_none());
        let per_pixel: Vec<(f64, Vector2<f64>, bool, bool)> = self
            .pixels()
            .map(|p| match from.cast(&p) {
                Some(hit) if still => (hit.depth, Vector2::zeros(), true, hit.dynamic),
                None if still => (0.0, Vector2::zeros(), false, false),
                Some(hit) => {
                    let world = if hit.dynamic {
                        motion.transform_point(&hit.world)
                    } else {
                        hit.world
                    };
                    let c = to.inverse.transform_point(&world);
                    if !(c.z > 0.0) {
                        return (hit.depth, out, false, hit.dynamic);
                    }
                    let q = k.project(&c);
                    let visible = in_view(&q)
                        && to
                            .cast(&q)
                            .is_some_and(|o| (o.depth - c.z).abs() <= VISIBILITY_TOL * c.z);
                    (hit.depth, q - p, visible, hit.dynamic)
                }
                None => {
                    // Points at infinity move with the rotation only.
                    let dir = to.inverse.rotation * from.ray(&p);
                    let flow = if dir.z > 0.0 { k.project(&dir) - p } else { out };
                    (0.0, flow, false, false)
                }
            })
            .collect();
        let depth = DepthMap::new(w, h, per_pixel.iter().map(|v| v.0).collect())?;
        if depth.valid_count() == 0 {
            return Err(Error::EmptyRender);
        }
        let flow = FlowField::new(w, h, per_pixel.iter().map(|v| v.1).collect())?;
        Ok((
            depth,
            flow,
            per_pixel.iter().map(|v| v.2).collect(),
            per_pixel.iter().map(|v| v.3).collect(),
        ))
    }
}

/// Pixel radius of a disk centred at `c` whose part inside the image covers
/// `fraction` of it.
fn silhouette_radius(c: &Pixel, width: usize, height: usize, fraction: f64) -> f64 {
    let target = fraction * (width * height) as f64;
    let covered = |r: f64| {
        let mut n = 0usize;
        for y in 0..height {
            for x in 0..width {
                if (Pixel::new(x as f64, y as f64) - c).norm_squared() <= r * r {
                    n += 1;
                }
            }
        }
        n as f64
    };
    let (mut lo, mut hi) = (0.0, (width + height) as f64);
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if covered(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}
