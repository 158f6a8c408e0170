//! The experiments behind each subcommand.

use std::rc::Rc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use hyperdyn::da::{verify_cones, DaMap};
use hyperdyn::dynamics::Dynamics;
use hyperdyn::exact::{AffineShift, ExactPoint};
use hyperdyn::foliation::{
    build_tube, integrate_leaf_at, leaf_density, leaf_separation_modulus, loop_chain, project_chain_nonlinear,
    projection_gaps, LeafField, SeparationOptions, SeparationTable, TubeV,
};
use hyperdyn::grid::{connected_components, Adjacency, GridSet};
use hyperdyn::invariant::{ball_cells, hancock_curve, orbit_closure, HancockCandidate, OrbitClosure, Sampling};
use hyperdyn::linalg::{self, Vector};
use hyperdyn::product::{
    bracket_linear, bracket_saturate, gamma_delta, lps_violation_witness, make_chain, projection_density,
    propagate_chain, Reduction,
};
use hyperdyn::semiconj::{
    check_leaf_correspondence, modulus_of_continuity, solve_h, solve_h_with, LeafCheckOptions, LeafItem,
    Semiconjugacy, SolveOptions,
};
use hyperdyn::shadowing::{shadow_linear, Boundary, PseudoOrbit};
use hyperdyn::symbolic::{
    bracket_closure, enclose, hull, hull_neighborhood_check, HorseshoeCoding, Sequence, SftHull, SymbolicSet,
};
use hyperdyn::torus::{frac, torus_dist};
use hyperdyn::{Error, Result, ToralAutomorphism};

use crate::config::ExperimentConfig;
use crate::oracle;
use crate::report::{Check, Report};

/// The experiments, in the order `verify-all` runs them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Classify,
    Shadow,
    Chains,
    GammaDelta,
    OrbitClosure,
    Saturate,
    DaBuild,
    Cones,
    Semiconjugacy,
    LeafCheck,
    LeafDensity,
    CalibrateTube,
    ChainProject,
    SftHull,
    Enclose,
}

impl Command {
    pub const ALL: [Command; 15] = [
        Command::Classify,
        Command::Shadow,
        Command::Chains,
        Command::GammaDelta,
        Command::OrbitClosure,
        Command::Saturate,
        Command::DaBuild,
        Command::Cones,
        Command::Semiconjugacy,
        Command::LeafCheck,
        Command::LeafDensity,
        Command::CalibrateTube,
        Command::ChainProject,
        Command::SftHull,
        Command::Enclose,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Classify => "classify",
            Command::Shadow => "shadow",
            Command::Chains => "chains",
            Command::GammaDelta => "gamma-delta",
            Command::OrbitClosure => "orbit-closure",
            Command::Saturate => "saturate",
            Command::DaBuild => "da-build",
            Command::Cones => "cones",
            Command::Semiconjugacy => "semiconjugacy",
            Command::LeafCheck => "leaf-check",
            Command::LeafDensity => "leaf-density",
            Command::CalibrateTube => "calibrate-tube",
            Command::ChainProject => "chain-project",
            Command::SftHull => "sft-hull",
            Command::Enclose => "enclose",
        }
    }

    pub fn from_name(s: &str) -> Option<Command> {
        Command::ALL.into_iter().find(|c| c.name() == s)
    }

    pub fn criterion(self) -> u32 {
        match self {
            Command::Classify => 1,
            Command::Shadow => 2,
            Command::Chains => 3,
            Command::GammaDelta => 4,
            Command::OrbitClosure | Command::Saturate => 5,
            Command::DaBuild | Command::Cones => 6,
            Command::Semiconjugacy => 7,
            Command::LeafCheck => 8,
            Command::LeafDensity => 9,
            Command::CalibrateTube | Command::ChainProject => 10,
            Command::SftHull => 11,
            Command::Enclose => 12,
        }
    }
}

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Shared state for a sequence of experiments: the config and the objects
/// several experiments need, built on first use.
pub struct Lab {
    pub cfg: ExperimentConfig,
    pub hash: String,
    da: Option<Rc<DaMap<3>>>,
    semi: Option<Rc<Semiconjugacy>>,
    closure: Option<Rc<(HancockCandidate, OrbitClosure)>>,
    table: Option<Rc<SeparationTable>>,
    tube: Option<Rc<TubeV>>,
}

impl Lab {
    pub fn new(cfg: ExperimentConfig) -> Self {
        let hash = cfg.hash();
        Lab { cfg, hash, da: None, semi: None, closure: None, table: None, tube: None }
    }

    fn default_matrix(&self) -> Result<ToralAutomorphism<3>> {
        ToralAutomorphism::classify_t3(self.cfg.matrix.rows)
    }

    fn da_base(&self) -> Result<ToralAutomorphism<3>> {
        ToralAutomorphism::classify_t3(self.cfg.da.rows)
    }

    pub fn da(&mut self) -> Result<Rc<DaMap<3>>> {
        if self.da.is_none() {
            let d = &self.cfg.da;
            self.da = Some(Rc::new(DaMap::build(self.da_base()?, d.x1, d.rho, d.mu, d.cstar)?));
        }
        Ok(self.da.clone().expect("set above"))
    }

    fn extremal_points(&self) -> Vec<ExactPoint> {
        let x1 = ExactPoint::from_point(&self.cfg.da.x1);
        let c = self.cfg.da.cstar;
        vec![x1.with_offset(&[0.0, c, 0.0]), x1.with_offset(&[0.0, -c, 0.0])]
    }

    fn solve_options(&self, m: usize, test_resolution: usize) -> SolveOptions {
        let s = &self.cfg.semiconjugacy;
        SolveOptions { m, tol: s.tol, refine_target: s.refine_target, test_resolution, ..SolveOptions::default() }
    }

    pub fn semiconjugacy(&mut self) -> Result<Rc<Semiconjugacy>> {
        if self.semi.is_none() {
            let f = self.da()?;
            let s = &self.cfg.semiconjugacy;
            let opts = self.solve_options(s.resolution, s.test_resolution);
            self.semi = Some(Rc::new(solve_h_with(f.as_ref(), &opts, &self.extremal_points())?));
        }
        Ok(self.semi.clone().expect("set above"))
    }

    fn closure_lattice(&self) -> i64 {
        let c = &self.cfg.closure;
        if c.lattice > 0 {
            c.lattice
        } else {
            2 * c.resolution as i64
        }
    }

    pub fn orbit_closure(&mut self) -> Result<Rc<(HancockCandidate, OrbitClosure)>> {
        if self.closure.is_none() {
            let b = self.da_base()?;
            let c = &self.cfg.closure;
            let q = self.closure_lattice();
            let cand = hancock_curve(&b, &self.cfg.da.x1, self.cfg.da.rho / 2.0, c.resolution, q)?;
            let oc = orbit_closure(&b, &cand.curve, c.resolution, c.max_iters, Sampling::Lattice { q })?;
            self.closure = Some(Rc::new((cand, oc)));
        }
        Ok(self.closure.clone().expect("set above"))
    }

    pub fn separation_table(&mut self) -> Result<Rc<SeparationTable>> {
        if self.table.is_none() {
            let f = self.da()?;
            let opts = SeparationOptions { pairs: self.cfg.tube.pairs, seed: self.cfg.run.seed, ..SeparationOptions::default() };
            self.table = Some(Rc::new(leaf_separation_modulus(f.as_ref(), &opts)?));
        }
        Ok(self.table.clone().expect("set above"))
    }

    pub fn tube(&mut self) -> Result<Rc<TubeV>> {
        if self.tube.is_none() {
            let f = self.da()?;
            let table = self.separation_table()?;
            let t = &self.cfg.tube;
            let tube =
                build_tube(f.as_ref(), &t.x0, t.delta_p, t.beta, t.eta, Some(table.as_ref()), t.bullet_samples, self.cfg.run.seed)?;
            self.tube = Some(Rc::new(tube));
        }
        Ok(self.tube.clone().expect("set above"))
    }

    /// Runs one experiment. Library errors end up in the report.
    pub fn run(&mut self, cmd: Command) -> Report {
        let t0 = Instant::now();
        let mut r = Report::new(cmd.name(), &[cmd.criterion()], &self.hash);
        let out = match cmd {
            Command::Classify => self.classify(&mut r),
            Command::Shadow => self.shadow(&mut r),
            Command::Chains => self.chains(&mut r),
            Command::GammaDelta => self.gamma_delta(&mut r),
            Command::OrbitClosure => self.orbit_closure_report(&mut r),
            Command::Saturate => self.saturate(&mut r),
            Command::DaBuild => self.da_build(&mut r),
            Command::Cones => self.cones(&mut r),
            Command::Semiconjugacy => self.semiconjugacy_report(&mut r),
            Command::LeafCheck => self.leaf_check(&mut r),
            Command::LeafDensity => self.leaf_density(&mut r),
            Command::CalibrateTube => self.calibrate_tube(&mut r),
            Command::ChainProject => self.chain_project(&mut r),
            Command::SftHull => self.sft_hull(&mut r),
            Command::Enclose => self.enclose(&mut r),
        };
        if let Err(e) = out {
            r.fail_with(&e);
        }
        r.finish(t0.elapsed().as_secs_f64());
        r
    }

    fn classify(&mut self, r: &mut Report) -> Result<()> {
        let rows = self.cfg.matrix.rows;
        let a = self.default_matrix()?;
        let s = a.summary();
        let mut reference = oracle::real_roots(&oracle::charpoly3(&rows));
        reference.sort_by(f64::total_cmp);
        let mut ev = s.eigenvalues.clone();
        ev.sort_by(f64::total_cmp);
        let dev = if reference.len() == ev.len() {
            ev.iter().zip(&reference).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
        } else {
            f64::INFINITY
        };
        r.check(Check::holds(1, "t3_class", "one contracting, one weakly contracting and one expanding real eigenvalue", s.t3_class));
        r.check(Check::at_most(1, "eigenvalues_vs_root_isolation", "eigenvalues agree with independent root isolation", dev, 1e-12));
        r.check(Check::above(1, "lambda_u", "the expanding eigenvalue exceeds 3", a.lambda_u(), 3.0));
        r.put("classification", &s);
        r.put("reference_roots", &reference);
        r.put("lambda_u_gt_3", a.lambda_u() > 3.0);
        Ok(())
    }

    fn shadow(&mut self, r: &mut Report) -> Result<()> {
        let a = self.default_matrix()?;
        let c = self.cfg.shadow.clone();
        let mut g = rng(self.cfg.run.seed, 2);
        let m = self.cfg.matrix.rows;
        let mut excess = f64::NEG_INFINITY;
        let mut worst_ratio = 0.0f64;
        let mut residual = 0.0f64;
        let mut recomputed = 0.0f64;
        let mut witness = None;
        for i in 0..c.orbits {
            let po = PseudoOrbit::random(&a, c.length, c.alpha, &mut g);
            let s = shadow_linear(&a, &po, Boundary::Free)?;
            let e = s.beta - 2.81 * po.alpha;
            if e > excess {
                excess = e;
                witness = Some(json!({ "orbit": i, "alpha": po.alpha, "beta": s.beta }));
            }
            worst_ratio = worst_ratio.max(s.beta / po.alpha);
            residual = residual.max(s.residual);
            // Orbit condition recomputed with the integer matrix.
            for w in s.orbit.windows(2) {
                let ax: Vector<3> = std::array::from_fn(|k| (0..3).map(|j| m[k][j] as f64 * w[0][j]).sum());
                recomputed = recomputed.max(torus_dist(&ax, &w[1]));
            }
            if i == 0 {
                let mut csv = String::from("n,x0,x1,x2,y0,y1,y2\n");
                for (k, (x, y)) in po.points.iter().zip(&s.orbit).enumerate() {
                    let y = frac(y);
                    csv += &format!("{k},{},{},{},{},{},{}\n", x[0], x[1], x[2], y[0], y[1], y[2]);
                }
                r.attach("pseudo_orbit.csv", csv.into_bytes());
                r.put("first", &s);
            }
        }
        let mut periodic_gap = 0.0f64;
        let mut periodic_residual = 0.0f64;
        for _ in 0..c.periodic_orbits {
            let po = PseudoOrbit::random_closed(&a, c.periodic_bits, c.alpha, &mut g);
            let n = po.len();
            let k = n / 3;
            let s1 = shadow_linear(&a, &po, Boundary::Periodic)?;
            let rotated: Vec<Vector<3>> = (0..n).map(|j| po.points[(j + k) % n]).collect();
            let s2 = shadow_linear(&a, &PseudoOrbit::measure(&a, rotated)?, Boundary::Periodic)?;
            for j in 0..n {
                periodic_gap = periodic_gap.max(torus_dist(&s1.orbit[(j + k) % n], &s2.orbit[j]));
            }
            periodic_residual = periodic_residual.max(s1.residual).max(s2.residual);
        }
        let bound = 2.81 * c.alpha;
        r.check(
            Check::at_most(2, "beta_bound", "shadowing distance at most 2.81 alpha + 1e-9", excess + bound, bound + 1e-9)
                .with_witness(witness.unwrap_or_default()),
        );
        r.check(Check::below(2, "residual", "shadowing orbits are true orbits", residual.max(recomputed), 1e-12));
        r.check(Check::at_most(2, "periodic_uniqueness", "periodic shadows of rotated inputs coincide", periodic_gap, 1e-10));
        r.check(Check::below(2, "periodic_residual", "periodic shadows are true orbits", periodic_residual, 1e-12));
        r.put("orbits", c.orbits);
        r.put("length", c.length);
        r.put("worst_beta_over_alpha", worst_ratio);
        r.put("K_bound", a.shadowing_constant());
        r.put("recomputed_residual", recomputed);
        Ok(())
    }

    fn chains(&mut self, r: &mut Report) -> Result<()> {
        let a = self.default_matrix()?;
        let c = self.cfg.chains.clone();
        let split = oracle::Splitting::of(&self.cfg.matrix.rows);
        let mut g = rng(self.cfg.run.seed, 3);
        let mut dev = 0.0f64;
        let mut dev_oracle = 0.0f64;
        let mut witness = None;
        for i in 0..c.count {
            let len = g.gen_range(2..=c.max_len.max(2));
            let mut x: Vector<3> = std::array::from_fn(|_| g.gen::<f64>());
            let mut pts = vec![x];
            for _ in 1..len {
                x = std::array::from_fn(|k| x[k] + g.gen_range(-c.step..c.step));
                pts.push(x);
            }
            let chain = make_chain(pts, &a)?;
            let (x0, xn) = (chain.points[0], *chain.points.last().expect("two points"));
            let p = propagate_chain(&a, &chain)?;
            let direct = bracket_linear(&a, &x0, &xn);
            let d = linalg::sup_norm(&linalg::sub(&p, &direct));
            if d > dev {
                dev = d;
                witness = Some(json!({ "chain": i, "len": len, "propagated": p, "direct": direct }));
            }
            dev_oracle = dev_oracle.max(linalg::sup_norm(&linalg::sub(&direct, &split.bracket(&x0, &xn))));
        }
        r.check(
            Check::at_most(3, "propagate_vs_bracket", "shortening a chain ends at the bracket of its endpoints", dev, 1e-10)
                .with_witness(witness.unwrap_or_default()),
        );
        r.check(Check::at_most(3, "bracket_vs_power_iteration", "linear bracket agrees with a power-iteration splitting", dev_oracle, 1e-10));
        r.put("chains", c.count);
        r.put("max_len", c.max_len);
        Ok(())
    }

    fn gamma_delta(&mut self, r: &mut Report) -> Result<()> {
        let a = self.default_matrix()?;
        let c = self.cfg.gamma.clone();
        let s = GridSet::full(3, c.resolution)?;
        let delta = c.delta_cells / c.resolution as f64;
        let gd = gamma_delta(&s, &[0.0; 3], delta, c.max_loops)?;
        let identity = gd.subgroup.hnf_basis == vec![[1, 0, 0], [0, 1, 0], [0, 0, 1]];
        let gens: Vec<[i64; 3]> = gd.loops.iter().map(|l| l.displacement).collect();
        let index = oracle::lattice_index(&gens);
        r.check(Check::holds(4, "hnf_identity", "loop classes generate all of Z^3", identity));
        r.check(Check::holds(4, "index_from_minors", "gcd of 3x3 minors of loop classes is 1", index == 1));
        // Loop witnesses: consecutive cells within δ, closing after N·k.
        let n = c.resolution as i64;
        let reach = delta * c.resolution as f64;
        let mut bad = 0usize;
        for l in &gd.loops {
            let ok_steps = l.witness.windows(2).all(|w| {
                let d: f64 = (0..3).map(|i| ((w[1][i] - w[0][i]) as f64).powi(2)).sum::<f64>().sqrt();
                d < reach
            });
            let (first, last) = (l.witness[0], l.witness[l.witness.len() - 1]);
            let closes = (0..3).all(|i| last[i] - first[i] == n * l.displacement[i]);
            bad += usize::from(!(ok_steps && closes));
        }
        r.check(Check::holds(4, "loop_witnesses", "every loop witness is a delta-chain of cells closing up", bad == 0));
        let stats = projection_density(&gd.subgroup, &a, c.window, c.budget, Reduction::Window);
        r.check(Check::below(4, "max_gap", "unstable projections of the subgroup leave no gap of 0.01", stats.max_gap, 1e-2));
        let split = oracle::Splitting::of(&self.cfg.matrix.rows);
        let sign = oracle::dot(&split.unstable, a.eigenvector(ToralAutomorphism::<3>::U)).signum();
        let reference = oracle_gaps(&gd.subgroup.hnf_basis, &split, sign, stats.shell, c.window);
        r.check(Check::at_most(4, "max_gap_oracle", "gap recomputed with a power-iteration splitting", (reference - stats.max_gap).abs(), 1e-12));
        let mut csv = Vec::new();
        stats.write_csv(&mut csv)?;
        r.attach("gaps.csv", csv);
        r.put("subgroup", &gd.subgroup);
        r.put("loops", gd.loops.len());
        r.put("cells", gd.cells);
        r.put("edges", gd.edges);
        r.put("max_gap", stats.max_gap);
        r.put("positions", stats.positions.len());
        r.put("shell", stats.shell);
        r.put("distinct_gaps", stats.distinct_gaps(1e-12));
        Ok(())
    }

    fn orbit_closure_report(&mut self, r: &mut Report) -> Result<()> {
        let cl = self.orbit_closure()?;
        let (cand, oc) = cl.as_ref();
        let c = &self.cfg.closure;
        let ball = ball_cells(3, c.resolution, &self.cfg.da.x1, self.cfg.da.rho / 2.0)?;
        let mut meet = oc.set.clone();
        meet.intersect_with(&ball);
        r.check(Check::holds(5, "avoids_ball", "the orbit closure leaves the ball around x1 uncovered", meet.is_empty() && !ball.is_empty()));
        r.check(Check::at_most(5, "invariance_residual", "the orbit closure is invariant", oc.invariance_residual, 0.0));
        r.check(Check::below(5, "proper", "the orbit closure is a proper subset", oc.set.coverage(), 1.0));
        let faces = connected_components(&oc.set, Adjacency::Face);
        let verts = connected_components(&oc.set, Adjacency::Vertex);
        r.put("coverage", oc.set.coverage());
        r.put("cells", oc.set.count());
        r.put("ball_cells", ball.count());
        r.put("iterations", oc.iterations);
        r.put("converged", oc.converged);
        r.put("samples", oc.samples);
        r.put("components_face", faces.count());
        r.put("components_vertex", verts.count());
        r.put("lattice", cand.q);
        r.put("good_fraction", cand.good_fraction);
        r.put("loop_lengths", &cand.loop_lengths);
        r.put("curve_points", cand.curve.points.len());
        self.attach_grid(r, "closure", &oc.set)?;
        Ok(())
    }

    fn attach_grid(&self, r: &mut Report, name: &str, s: &GridSet) -> Result<()> {
        let mut hgs = Vec::new();
        s.write_hgs(&mut hgs)?;
        r.attach(&format!("{name}.hgs"), hgs);
        if self.cfg.run.images {
            let mut pgm = Vec::new();
            let k = if s.dim() == 3 { s.cell_of(&self.cfg.da.x1[..s.dim()]).checked_rem(s.resolution()).unwrap_or(0) } else { 0 };
            s.write_pgm(&mut pgm, k)?;
            r.attach(&format!("{name}.pgm"), pgm);
        }
        Ok(())
    }

    fn saturate(&mut self, r: &mut Report) -> Result<()> {
        let b = self.da_base()?;
        let c = self.cfg.closure.clone();
        let input = match &c.input {
            Some(p) => GridSet::read_hgs(std::fs::File::open(p)?)?,
            None => self.orbit_closure()?.1.set.clone(),
        };
        let delta_p = c.delta_cells / input.resolution() as f64;
        let ball = ball_cells(3, input.resolution(), &self.cfg.da.x1, self.cfg.da.rho / 2.0)?;
        let mut meet = input.clone();
        meet.intersect_with(&ball);
        let sat = bracket_saturate(&b, &input, delta_p, c.rounds)?;
        let growth_rounds = sat.coverage.windows(2).filter(|w| w[1] > w[0]).count();
        r.check(Check::holds(5, "input_avoids_ball", "the unsaturated set leaves the ball around x1 uncovered", meet.is_empty()));
        r.check(Check::at_least(5, "coverage", "bracket saturation covers the torus", sat.set.coverage(), 0.99));
        if let Some((x, y, z)) = lps_violation_witness(&b, &input, delta_p) {
            r.put("input_bracket_witness", json!({ "x": input.center(x), "y": input.center(y), "bracket": input.center(z) }));
        }
        r.put("input_coverage", input.coverage());
        r.put("coverage_by_round", &sat.coverage);
        r.put("growth_rounds", growth_rounds);
        r.put("converged", sat.converged);
        r.put("delta_p", delta_p);
        self.attach_grid(r, "saturated", &sat.set)?;
        Ok(())
    }

    fn da_build(&mut self, r: &mut Report) -> Result<()> {
        let f = self.da()?;
        let b = self.da_base()?;
        let summary = f.summary();
        let outer = f.cutoff().outer;
        let mut g = rng(self.cfg.run.seed, 6);
        let (mut checked, mut mismatches) = (0usize, 0usize);
        let mut witness = None;
        while checked < self.cfg.da.support_samples {
            let x: Vector<3> = std::array::from_fn(|_| g.gen::<f64>());
            if torus_dist(&x, &self.cfg.da.x1) < outer {
                continue;
            }
            checked += 1;
            let (y, z) = (f.forward(&x), b.apply(&x));
            if (0..3).any(|i| y[i].to_bits() != z[i].to_bits()) {
                mismatches += 1;
                witness.get_or_insert(x);
            }
        }
        r.check(
            Check::holds(6, "support_exact", "outside the ball the map is bit-identical to the automorphism", mismatches == 0)
                .with_witness(json!(witness)),
        );
        // Center derivatives by central differences along the center eigenvector.
        let ec = *b.eigenvector(ToralAutomorphism::<3>::C);
        let dual = b.dual_basis()[ToralAutomorphism::<3>::C];
        let h = 1e-6;
        let mut fixed_moves = 0.0f64;
        let mut fd = Vec::new();
        for p in f.bifurcation_points() {
            fixed_moves = fixed_moves.max(torus_dist(&f.forward(&p), &p));
            let plus = f.forward(&linalg::add(&p, &linalg::scale(&ec, h)));
            let minus = f.forward(&linalg::sub(&p, &linalg::scale(&ec, h)));
            fd.push(linalg::dot(&dual, &linalg::sub(&plus, &minus)) / (2.0 * h));
        }
        r.check(Check::below(6, "fixed_points", "the three bifurcation points are fixed", fixed_moves, 1e-12));
        r.check(Check::at_most(6, "mu_derivative", "center derivative at x1 equals mu", (fd[0] - self.cfg.da.mu).abs(), 1e-6));
        let d_ok = fd[1..].iter().all(|d| *d > 0.0 && *d < 1.0) && (fd[1] - fd[2]).abs() < 1e-6;
        r.check(Check::holds(6, "created_derivatives", "the two created fixed points share a center derivative in (0, 1)", d_ok));
        let fd_dev = fd.iter().zip(&summary.axis_derivatives).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        r.check(Check::at_most(6, "derivative_route", "finite differences agree with the analytic derivatives", fd_dev, 1e-6));
        r.put("summary", &summary);
        r.put("finite_difference_derivatives", &fd);
        r.put("support_samples", checked);
        Ok(())
    }

    fn cones(&mut self, r: &mut Report) -> Result<()> {
        let f = self.da()?;
        let d = self.cfg.da.clone();
        let rep = verify_cones(f.as_ref(), d.theta, d.cone_samples, self.cfg.run.seed);
        r.check(
            Check::holds(6, "cones", "stable and unstable cone fields are strictly invariant", rep.passed())
                .with_witness(json!(rep.witnesses)),
        );
        r.check(Check::at_least(6, "unstable_growth", "vectors in the unstable cone grow by at least 1.5", rep.min_unstable_growth, 1.5));
        r.put("report", &rep);
        // Negative control: a strong bifurcation on the default matrix.
        let control = DaMap::build(self.default_matrix()?, [0.0; 3], d.rho, d.control_mu, d.cstar)
            .map(|g| verify_cones(&g, d.theta, d.cone_samples, self.cfg.run.seed));
        let rejected = match &control {
            Ok(c) => !c.passed() && !c.witnesses.is_empty(),
            Err(_) => false,
        };
        r.check(Check::holds(6, "negative_control", "the cone check fails with a witness for the control map", rejected));
        match control {
            Ok(c) => r.put("control", json!({ "mu": d.control_mu, "stable_failures": c.stable_failures, "unstable_failures": c.unstable_failures, "witness": c.witnesses.first() })),
            Err(e) => r.put("control", json!({ "mu": d.control_mu, "error": e.to_string() })),
        }
        Ok(())
    }

    fn semiconjugacy_report(&mut self, r: &mut Report) -> Result<()> {
        let f = self.da()?;
        let s = self.semiconjugacy()?;
        let c = self.cfg.semiconjugacy.clone();
        r.check(Check::below(7, "residual", "A H = H G on the test grid", s.residual, 1e-6));
        // Affine shift: H = id + (A − I)^{-1} v.
        let b = self.da_base()?;
        let aff = AffineShift::new(b.clone(), c.affine_shift);
        let sa = solve_h(&aff, &SolveOptions { m: 8, test_resolution: 8, ..self.solve_options(8, 8) })?;
        let mut bm = oracle::to_float(&self.cfg.da.rows);
        for (i, row) in bm.iter_mut().enumerate() {
            row[i] -= 1.0;
        }
        let expected = oracle::cramer(&bm, &c.affine_shift);
        let mut g = rng(self.cfg.run.seed, 7);
        let mut affine_dev = 0.0f64;
        for _ in 0..64 {
            let x: Vector<3> = std::array::from_fn(|_| g.gen::<f64>());
            affine_dev = affine_dev.max(linalg::sup_norm(&linalg::sub(&sa.displacement(&aff, &x), &expected)));
        }
        r.check(Check::at_most(7, "affine_oracle", "affine shift recovers (A - I)^{-1} v", affine_dev, 1e-9));
        let mut sweep = Vec::new();
        for &m in &c.sweep {
            let ratio = if m == s.m {
                s.c_ratio
            } else {
                solve_h_with(f.as_ref(), &self.solve_options(m, 0), &self.extremal_points())?.c_ratio
            };
            sweep.push((m, ratio));
        }
        let spread = sweep.iter().map(|&(_, x)| (x - s.c_ratio).abs() / s.c_ratio).fold(0.0, f64::max);
        r.check(Check::at_most(7, "c_stability", "the ratio sup|H - id| / r varies by at most 10% across resolutions", spread, 0.1));
        let modulus = modulus_of_continuity(s.as_ref(), f.as_ref(), &c.modulus_radii, c.modulus_pairs, self.cfg.run.seed);
        let mut csv = String::from("radius,value\n");
        for row in &modulus {
            csv += &format!("{},{}\n", row.radius, row.value);
        }
        r.attach("modulus.csv", csv.into_bytes());
        let mut hsc = Vec::new();
        s.write_hsc(f.as_ref(), &mut hsc)?;
        r.attach("h.hsc", hsc);
        r.put("solution", s.as_ref());
        r.put("affine_expected", expected);
        r.put("affine_deviation", affine_dev);
        r.put("c_sweep", &sweep);
        r.put("modulus", &modulus);
        Ok(())
    }

    fn leaf_check(&mut self, r: &mut Report) -> Result<()> {
        let f = self.da()?;
        let s = self.semiconjugacy()?;
        let mut opts = LeafCheckOptions::for_residual(s.residual);
        opts.samples = self.cfg.semiconjugacy.leaf_samples;
        opts.seed = self.cfg.run.seed;
        opts.fiber = Some((self.cfg.da.x1, self.cfg.da.cstar));
        let bound = 10.0 * s.residual;
        let mut items = Vec::new();
        for item in LeafItem::ALL {
            let lc = check_leaf_correspondence(s.as_ref(), f.as_ref(), item, &opts)?;
            let id = serde_json::to_value(item).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
            r.check(Check::at_most(8, &id, item.statement(), lc.deviation, bound).with_witness(json!(lc.witness)));
            r.check(Check::holds(8, &format!("{id}_structure"), "no structural violations", lc.violations == 0 && lc.passed));
            items.push(lc);
        }
        r.put("residual", s.residual);
        r.put("items", &items);
        Ok(())
    }

    fn leaf_density(&mut self, r: &mut Report) -> Result<()> {
        let f = self.da()?;
        let c = self.cfg.leaves.clone();
        for (field, id, text) in [
            (LeafField::U, "unstable", "an unstable leaf visits 99% of the cells"),
            (LeafField::C, "center", "a center leaf visits 99% of the cells"),
        ] {
            let cov = leaf_density(f.as_ref(), &c.seed_point, field, c.length, c.resolution)?;
            r.check(Check::at_least(9, id, text, cov, 0.99));
            r.put(&format!("{id}_coverage"), cov);
        }
        let leaf = integrate_leaf_at(f.as_ref(), &c.seed_point, LeafField::U, c.polyline_length, c.step)?;
        let mut csv = Vec::new();
        leaf.write_csv(f.as_ref(), &mut csv)?;
        r.attach("unstable_leaf.csv", csv);
        r.put("length", c.length);
        r.put("resolution", c.resolution);
        Ok(())
    }

    fn calibrate_tube(&mut self, r: &mut Report) -> Result<()> {
        let f = self.da()?;
        let table = self.separation_table()?;
        let tube = self.tube()?;
        r.check(Check::above(10, "delta0", "delta0 is positive", tube.delta0, 0.0));
        r.check(Check::above(10, "eps0", "eps0 is positive", tube.eps0, 0.0));
        r.check(Check::holds(10, "bullet", "points of V stay close to their unstable leaves inside V", tube.bullet_holds()));
        let cal = tube.calibration(table.as_ref());
        r.attach("calibration.json", serde_json::to_vec_pretty(&cal).map_err(|e| Error::Io(e.to_string()))?);
        r.put("calibration", &cal);
        r.put("tube", tube.as_ref());
        r.put("separation_pairs", table.pairs);
        r.put("separation_excluded", table.excluded);
        r.put("straight_center_leaves", tube.straightness == 0.0 && f.cstar() > 0.0);
        Ok(())
    }

    fn chain_project(&mut self, r: &mut Report) -> Result<()> {
        let f = self.da()?;
        let tube = self.tube()?;
        let t = self.cfg.tube.clone();
        let chain = loop_chain(f.as_ref(), &tube, &t.x0, &t.loop_class, tube.eps0 * t.step_fraction)?;
        let last = *chain.points.last().ok_or(Error::EmptyChain)?;
        let exits = !tube.contains(f.as_ref(), &last);
        r.check(Check::holds(10, "exits", "the chain leaves the tube", exits));
        let proj = project_chain_nonlinear(f.as_ref(), &tube, &chain, t.step)?;
        let gaps = projection_gaps(f.as_ref(), &tube, &proj, &last);
        r.check(Check::at_most(10, "gap", "projections leave no gap larger than 2 eps on the exit side", gaps.max_gap, 2.0 * chain.epsilon));
        // Linear map: nonlinear projection against chain shortening on reversed prefixes.
        let b = self.da_base()?;
        let lin = project_chain_nonlinear(&b, &tube, &chain, t.step)?;
        let mut lin_dev = 0.0f64;
        for (i, p) in lin.points.iter().enumerate().skip(1) {
            let prefix: Vec<Vector<3>> = chain.points[..=i].iter().rev().copied().collect();
            let q = propagate_chain(&b, &make_chain(prefix, &b)?)?;
            lin_dev = lin_dev.max(linalg::norm(&linalg::sub(p, &q)));
        }
        r.check(Check::at_most(10, "linear_cross_check", "the projection for the linear map matches chain shortening", lin_dev, 1e-9));
        r.put("chain_points", chain.points.len());
        r.put("chain_epsilon", chain.epsilon);
        r.put("projections", proj.points.len());
        r.put("level_eps_max", proj.level_eps.iter().copied().fold(0.0, f64::max));
        r.put("linear_deviation", proj.linear_deviation);
        r.put("gaps", &gaps);
        r.put("eps0", tube.eps0);
        r.put("loop_class", t.loop_class);
        Ok(())
    }

    fn lambda0(&self) -> Result<SymbolicSet> {
        preset_lambda0(&self.cfg.symbolic.lambda0)
    }

    fn sft_hull(&mut self, r: &mut Report) -> Result<()> {
        let c = self.cfg.symbolic.clone();
        let src = self.lambda0()?;
        let mut lengths = c.hull_lengths.clone();
        lengths.sort_unstable();
        let mut hulls = Vec::new();
        let mut rows = Vec::new();
        let (mut contain, mut nbhd, mut factors_ok) = (true, true, true);
        for &n in &lengths {
            let h = hull(&src, n)?;
            let rep = hull_neighborhood_check(&src, &h);
            let contains = src.generators.iter().all(|g| h.allows(g));
            let brute = brute_factors(&src, n);
            contain &= contains;
            nbhd &= rep.passed;
            factors_ok &= brute == h.words;
            rows.push(json!({ "n": n, "words": h.words.len(), "contains": contains, "neighborhood": rep }));
            hulls.push(h);
        }
        let nested = hulls.windows(2).all(|w| w[1].is_subshift_of(&w[0]));
        r.check(Check::holds(11, "nesting", "longer hulls are subshifts of shorter ones", nested));
        r.check(Check::holds(11, "containment", "every generator lies in every hull", contain));
        r.check(Check::holds(11, "neighborhood", "hull points lie within 2^-floor((n-1)/2) of the set", nbhd));
        r.check(Check::holds(11, "words_brute_force", "hull words equal brute-force factors", factors_ok));
        let mut closures = Vec::new();
        let (mut failures, mut count_mismatch) = (0usize, 0usize);
        let mut sfts: Vec<(String, SftHull)> = Vec::new();
        for k in 2..=c.max_alphabet {
            for &n in &c.closure_lengths {
                sfts.push((format!("full k={k} n={n}"), SftHull::full(k, n)));
            }
        }
        sfts.push(("golden mean".into(), SftHull::from_words(2, 2, vec![vec![0, 0], vec![0, 1], vec![1, 0]])?));
        for (h, &n) in hulls.iter().zip(&lengths) {
            sfts.push((format!("hull n={n}"), h.clone()));
        }
        for (name, h) in &sfts {
            let rep = bracket_closure(h, c.max_period);
            failures += rep.failures;
            let m = transition_matrix(h);
            for p in 1..=c.max_period {
                let expected = oracle::primitive_count(p, |d| oracle::trace_power(&m, d));
                count_mismatch += usize::from(expected != h.periodic_points(p).len() as i64);
            }
            closures.push(json!({ "sft": name, "closure": rep }));
        }
        r.check(Check::holds(11, "bracket_closure", "brackets of periodic points stay in the SFT", failures == 0));
        r.check(Check::holds(11, "periodic_counts", "periodic point counts match traces of the transition matrix", count_mismatch == 0));
        r.put("source", &src);
        r.put("hulls", rows);
        r.put("closures", closures);
        if let Some(h) = hulls.last() {
            r.attach("hull.json", serde_json::to_vec_pretty(&h.to_json()).map_err(|e| Error::Io(e.to_string()))?);
        }
        Ok(())
    }

    fn lambda1(&self, name: &str) -> Result<GridSet> {
        let mut g = GridSet::empty(2, self.cfg.symbolic.lambda1_resolution)?;
        match name {
            "empty" => {}
            "fixed-cell" => {
                g.insert(0);
            }
            other => return Err(Error::Invalid(format!("unknown lambda1 preset {other}"))),
        }
        Ok(g)
    }

    fn enclose(&mut self, r: &mut Report) -> Result<()> {
        let c = self.cfg.symbolic.clone();
        let coding = HorseshoeCoding { radius: c.coding_radius };
        let l0 = self.lambda0()?;
        let l1 = self.lambda1(&c.lambda1)?;
        let e = enclose(&l0, &l1, c.enclose_n, &coding)?;
        r.check(Check::holds(12, "disjoint", "the hull cells avoid the grid part", e.is_disjoint()));
        let closure = e.hull.as_ref().map(|h| bracket_closure(h, c.max_period));
        let closed = closure.as_ref().is_none_or(|x| x.failures == 0);
        r.check(Check::holds(12, "bracket_closed", "the enclosure is closed under brackets", closed));
        let within = e.neighborhood.as_ref().is_none_or(|x| x.passed);
        r.check(Check::holds(12, "neighborhood", "the enclosure lies in the requested neighborhood", within));
        if l0.generators.is_empty() {
            r.check(Check::holds(12, "echo", "with no symbolic part the grid part is returned unchanged", e.lambda1 == l1 && e.hull_cells.is_empty()));
        }
        // Overlap control: a periodic orbit against the cell of the fixed point.
        let p001 = preset_lambda0("periodic-001")?;
        let cell = self.lambda1("fixed-cell")?;
        let small = enclose(&p001, &cell, c.overlap_n, &coding);
        let overlap = matches!(small, Err(Error::Overlap(_)));
        r.check(Check::holds(12, "overlap_raised", "too short a hull overlaps the grid component", overlap));
        let large = enclose(&p001, &cell, c.enclose_n, &coding).map(|x| x.is_disjoint());
        r.check(Check::holds(12, "overlap_resolved", "a longer hull is disjoint from it", matches!(large, Ok(true))));
        r.put("hull_cells", e.hull_cells.count());
        r.put("hull", e.hull.as_ref().map(SftHull::to_json));
        r.put("closure", closure);
        r.put("neighborhood", &e.neighborhood);
        r.put("overlap_error", small.err().map(|x| x.to_string()));
        if self.cfg.run.images {
            let mut both = e.hull_cells.clone();
            both.union_with(&e.lambda1);
            let mut pgm = Vec::new();
            both.write_pgm(&mut pgm, 0)?;
            r.attach("enclosure.pgm", pgm);
        }
        Ok(())
    }
}

/// Symbolic sets selectable from the config.
pub fn preset_lambda0(name: &str) -> Result<SymbolicSet> {
    match name {
        "heteroclinic" => SymbolicSet::new(
            2,
            vec![Sequence::periodic(&[0]), Sequence::periodic(&[1]), Sequence::heteroclinic(&[0], &[1])],
        ),
        "periodic-001" => SymbolicSet::new(2, vec![Sequence::periodic(&[0, 0, 1])]),
        "empty" => Ok(SymbolicSet { k: 2, generators: Vec::new() }),
        other => Err(Error::Invalid(format!("unknown lambda0 preset {other}"))),
    }
}

/// `n`-windows read directly off the generators over a span covering their
/// transients and a few periods on each side.
fn brute_factors(s: &SymbolicSet, n: usize) -> std::collections::BTreeSet<Vec<u8>> {
    let mut out = std::collections::BTreeSet::new();
    for g in &s.generators {
        let span = (g.pre.len() + g.period.len() + g.left.as_ref().map_or(0, Vec::len) + g.shift.unsigned_abs() as usize + 2 * n) as i64 * 3;
        for i in -span..=span {
            out.insert((0..n as i64).map(|t| g.at(i + t)).collect());
        }
    }
    out
}

fn transition_matrix(h: &SftHull) -> Vec<Vec<i64>> {
    let verts: Vec<Vec<u8>> = h
        .words
        .iter()
        .flat_map(|w| [w[..h.n - 1].to_vec(), w[1..].to_vec()])
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    let pos = |v: &[u8]| verts.iter().position(|x| x == v).expect("vertex");
    let mut m = vec![vec![0i64; verts.len()]; verts.len()];
    for w in &h.words {
        m[pos(&w[..h.n - 1])][pos(&w[1..])] = 1;
    }
    m
}

/// Largest gap in `[0, window]` of unstable coordinates of combinations of
/// `basis` with coefficients in `[−shell, shell]`.
fn oracle_gaps(basis: &[[i64; 3]], split: &oracle::Splitting, sign: f64, shell: i64, window: f64) -> f64 {
    let proj: Vec<f64> = basis.iter().map(|b| sign * split.unstable_coordinate(&b.map(|x| x as f64))).collect();
    let mut pos = vec![0.0f64];
    let mut pts = Vec::new();
    let span = 2 * shell + 1;
    let total = (span as usize).pow(proj.len() as u32);
    for idx in 0..total {
        let mut rem = idx;
        let mut v = 0.0;
        for p in &proj {
            v += ((rem % span as usize) as i64 - shell) as f64 * p;
            rem /= span as usize;
        }
        if (0.0..=window).contains(&v) {
            pts.push(v);
        }
    }
    pos.extend(pts);
    pos.push(window);
    pos.sort_by(f64::total_cmp);
    pos.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
}
