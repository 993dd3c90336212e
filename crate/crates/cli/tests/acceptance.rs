//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use k3lat_core::bundle::{same_genus_invariants, Bundle};
use k3lat_core::classify::{candidate_indices, classify_report, expected_indices};
use k3lat_core::fibration::height_pairing;
use k3lat_core::invariants::{action_on_discriminant, restrict_action};
use k3lat_core::isometry::{box_vectors, generated_by_minimal, is_isometric, minimum, safe_box_radius, short_vectors};
use k3lat_core::lattice::{DiscriminantGroup, FiniteQuadraticForm, Lattice};
use k3lat_core::linalg::{int, rat, smith_normal_form, IntMatrix};

type Outcome = Result<String, String>;

struct Report {
    lines: Vec<(u32, bool)>,
}

impl Report {
    fn run(&mut self, n: u32, name: &str, budget: Duration, f: impl FnOnce() -> Outcome) {
        let start = Instant::now();
        let r = f();
        let took = start.elapsed();
        let (ok, detail) = match r {
            Ok(d) if took <= budget => (true, d),
            Ok(d) => (false, format!("{d}; took {took:.1?}, budget {budget:?}")),
            Err(d) => (false, d),
        };
        println!("{} {n:>2} {name}: {detail} [{took:.1?}]", if ok { "PASS" } else { "FAIL" });
        self.lines.push((n, ok));
    }
}

fn bundle() -> Bundle {
    Bundle::load(Bundle::default_dir()).expect("bundled data loads")
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn table_reproduction(b: &Bundle) -> Outcome {
    let table: [(&str, usize, u64, &[u64]); 14] = [
        ("Z2", 8, 256, &[2, 2, 2, 2, 2, 2, 2, 2]),
        ("Z3", 12, 729, &[3, 3, 3, 3, 3, 3]),
        ("Z4", 14, 1024, &[2, 2, 4, 4, 4, 4]),
        ("Z5", 16, 625, &[5, 5, 5, 5]),
        ("Z6", 16, 1296, &[6, 6, 6, 6]),
        ("Z7", 18, 343, &[7, 7, 7]),
        ("Z8", 18, 512, &[2, 4, 8, 8]),
        ("Z2^2", 12, 1024, &[2, 2, 2, 2, 2, 2, 4, 4]),
        ("Z2^3", 14, 1024, &[2, 2, 2, 2, 2, 2, 4, 4]),
        ("Z2^4", 15, 512, &[2, 2, 2, 2, 2, 2, 8]),
        ("Z2xZ4", 16, 1024, &[2, 2, 4, 4, 4, 4]),
        ("Z2xZ6", 18, 432, &[3, 12, 12]),
        ("Z3^2", 16, 729, &[3, 3, 3, 3, 9]),
        ("Z4^2", 18, 256, &[2, 2, 8, 8]),
    ];
    for (key, rank, det, disc) in table {
        let g = b.group(key).map_err(|e| e.to_string())?;
        let omega = b.omega(g).map_err(|e| format!("{key}: {e}"))?.omega.lattice();
        let d = DiscriminantGroup::of(&omega).map_err(|e| e.to_string())?;
        let want: Vec<_> = disc.iter().map(|&x| int(x as i64)).collect();
        ensure(
            omega.rank() == rank && omega.det().magnitude().to_string() == det.to_string() && d.invariant_factors == want,
            format!("{key}: rank {}, det {}, disc {}", omega.rank(), omega.det(), d.group_string()),
        )?;
    }
    Ok("14/14 rows match in rank, |det| and discriminant group".into())
}

fn six_i4(b: &Bundle) -> Outcome {
    let ns = b.ns("z4xz4").map_err(|e| e.to_string())?;
    ensure(ns.index == int(16), format!("[NS:Tr] = {}", ns.index))?;
    ensure(ns.lattice.det() == int(-16), format!("det {}", ns.lattice.det()))?;
    let form = DiscriminantGroup::of(&ns.lattice).map_err(|e| e.to_string())?.form();
    let want = FiniteQuadraticForm {
        orders: vec![4, 4],
        q: vec![rat(-1, 4), rat(-1, 4)],
        b: vec![vec![rat(3, 4), rat(0, 1)], vec![rat(0, 1), rat(3, 4)]],
    };
    ensure(form.orders == want.orders && form.is_isometric(&want), "discriminant form is not ℤ/4(−1/4)²")?;
    let t1 = &ns.element("t1").ok_or("no t1")?.class;
    let formula = ns
        .trivial
        .parse_combination(
            "2F + s - 3/4 C1^(1) - 1/2 C2^(1) - 1/4 C3^(1) - 3/4 C1^(2) - 1/2 C2^(2) - 1/4 C3^(2) \
             - 3/4 C1^(3) - 1/2 C2^(3) - 1/4 C3^(3) - 3/4 C1^(4) - 1/2 C2^(4) - 1/4 C3^(4) \
             - 1/2 C1^(5) - C2^(5) - 1/2 C3^(5)",
        )
        .map_err(|e| e.to_string())?;
    ensure(*t1 == formula, "t1 differs from the printed formula")?;
    Ok("[NS:Tr] = 16, det −16, disc ℤ/4(−1/4)⊕ℤ/4(−1/4), t1 matches".into())
}

fn invariant_lattices(b: &Bundle) -> Outcome {
    let mut done = Vec::new();
    for key in ["Z4^2", "G24", "G22", "G4", "Z2^3", "Z2^4"] {
        let g = b.group(key).map_err(|e| e.to_string())?;
        let rf = g.ns_invariant.as_ref().ok_or(format!("{key}: no printed NS^G"))?;
        let printed = Lattice::from_json(&rf.gram).map_err(|e| e.to_string())?;
        let inv = b.omega(g).map_err(|e| e.to_string())?.invariant.lattice();
        same_genus_invariants(&inv, &printed).map_err(|e| e.to_string())?.map_err(|e| format!("{key}: {e}"))?;
        if printed.definiteness().is_some() {
            let m = is_isometric(&inv, &printed).map_err(|e| e.to_string())?.ok_or(format!("{key}: not isometric"))?;
            ensure(m.transpose().mul(printed.gram()).mul(&m) == *inv.gram(), format!("{key}: bad witness"))?;
        }
        done.push(format!("{key} (rank {})", inv.rank()));
    }
    Ok(format!("{} match (all hyperbolic, so genus invariants only)", done.join(", ")))
}

fn minima(b: &Bundle) -> Outcome {
    for g in b.table_rows() {
        let omega = b.omega(g).map_err(|e| e.to_string())?.omega.lattice();
        let roots = short_vectors(&omega, &int(2)).map_err(|e| e.to_string())?;
        ensure(roots.is_empty(), format!("{}: {} norm −2 vectors", g.key, roots.len()))?;
        let m = minimum(&omega).map_err(|e| e.to_string())?;
        ensure(m == int(4), format!("{}: minimum {m}", g.key))?;
        ensure(generated_by_minimal(&omega).map_err(|e| e.to_string())?, format!("{}: not generated by norm 4 vectors", g.key))?;
    }
    Ok("all 14 Ω_G: no roots, minimum 4, generated by minimal vectors".into())
}

fn discriminant_action(b: &Bundle) -> Outcome {
    let mut gens = 0;
    for g in &b.groups {
        let data = b.omega(g).map_err(|e| e.to_string())?;
        let ra = restrict_action(&data.action, &data.omega).map_err(|e| e.to_string())?;
        for (i, m) in ra.generators.iter().enumerate() {
            let d = action_on_discriminant(&ra.lattice, m).map_err(|e| e.to_string())?;
            ensure(d.is_identity(), format!("{}: generator {i} acts nontrivially", g.key))?;
            gens += 1;
        }
    }
    Ok(format!("{gens} generators over {} groups act trivially", b.groups.len()))
}

fn heights(b: &Bundle) -> Outcome {
    let mut count = 0;
    for name in b.fibrations.keys() {
        let ns = b.ns(name).map_err(|e| format!("{name}: {e}"))?;
        let conf = &ns.trivial.config;
        let orders: Vec<u32> = ns.generators.iter().map(|g| g.order).collect();
        for e in ns.elements.iter().filter(|e| e.coeffs.iter().any(|&c| c != 0)) {
            let h = height_pairing(conf, &e.pattern, 0, &e.pattern, 0, 0, true).map_err(|e| e.to_string())?;
            ensure(h == rat(0, 1), format!("{name} {}: height {h}", e.name))?;
            let n = e
                .coeffs
                .iter()
                .zip(&orders)
                .map(|(&c, &o)| o / gcd(c, o))
                .fold(1, |a, x| a / gcd(a, x) * x);
            let v = ns.trivial.torsion_section_class(&e.pattern, 0, n).map_err(|err| format!("{name} {}: {err}", e.name))?;
            let norm = ns.trivial.lattice.product_rat(&v, &v);
            ensure(norm == rat(-2, 1), format!("{name} {}: v² = {norm}", e.name))?;
            ensure(v.iter().all(|x| (x * rat(n as i64, 1)).is_integer()), format!("{name} {}: n·v not integral", e.name))?;
            count += 1;
        }
    }
    Ok(format!("{count} sections over {} fibrations: height 0, v² = −2, n·v integral", b.fibrations.len()))
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a.max(1)
    } else {
        gcd(b, a % b)
    }
}

fn index_identities(b: &Bundle) -> Outcome {
    let mut ok = Vec::new();
    let mut bad = Vec::new();
    for g in b.groups.iter().filter(|g| g.glued_index.is_some()) {
        let stated = g.glued_index.unwrap();
        match b.glued(g).map_err(|e| e.to_string())? {
            None => continue,
            Some((gl, _)) => {
                let ns_inv = b.omega(g).map_err(|e| e.to_string())?.invariant.lattice();
                let t = b.transcendental(&g.fibration).map_err(|e| e.to_string())?.ok_or("no T_X")?;
                let ratio = ns_inv.direct_sum(&t).det() / gl.invariant.lattice().det();
                let line = format!("{}: det ratio {ratio}, stated {stated}²", g.key);
                if ratio == int((stated * stated) as i64) {
                    ok.push(line);
                } else {
                    bad.push(line);
                }
            }
        }
    }
    if bad.is_empty() {
        Ok(format!("{} statements hold ({})", ok.len(), ok.join("; ")))
    } else {
        Err(format!(
            "{} hold, {} contradicted: {} (the printed H²^G Gram has det −256 and |det Ω| = 2^8, so the index is 2)",
            ok.len(),
            bad.len(),
            bad.join("; ")
        ))
    }
}

fn classification(b: &Bundle) -> Outcome {
    // ℤ/2 with L² ≡ 2 mod 4: split only
    let z2 = b.omega(b.group("Z2").unwrap()).map_err(|e| e.to_string())?.omega.lattice();
    for d in (1..=30).step_by(2) {
        let got = candidate_indices(&z2, d).map_err(|e| e.to_string())?;
        ensure(got == [1].into_iter().collect(), format!("ℤ/2 d = {d}: {got:?}"))?;
    }
    for d in 1..=30u64 {
        let c = classify_report(b, "Z7", d, 4).map_err(|e| e.to_string())?;
        let want: BTreeSet<u64> = match d % 7 {
            0 => [7].into_iter().collect(),
            1 | 2 | 4 => [1].into_iter().collect(),
            _ => BTreeSet::new(),
        };
        ensure(c.embeddable_indices() == want, format!("ℤ/7 d = {d}: {:?}", c.embeddable_indices()))?;
    }
    let mut differ = Vec::new();
    let mut total = 0;
    for g in b.table_rows() {
        let omega = b.omega(g).map_err(|e| e.to_string())?.omega.lattice();
        let mut n = 0;
        for d in 1..=30 {
            total += 1;
            let got = candidate_indices(&omega, d).map_err(|e| e.to_string())?;
            let listed = expected_indices(&g.key, d).ok_or("no case list")?;
            ensure(got.is_subset(&listed), format!("{} d = {d}: {got:?} outside {listed:?}", g.key))?;
            if got != listed {
                n += 1;
            }
        }
        if n > 0 {
            differ.push(format!("{} ({n})", g.key));
        }
    }
    let z4 = b.omega(b.group("Z4").unwrap()).map_err(|e| e.to_string())?.omega.lattice();
    let z4d2 = candidate_indices(&z4, 2).map_err(|e| e.to_string())?;
    if differ.is_empty() {
        Ok(format!("ℤ/2 split-only and ℤ/7 verdicts hold; case lists match for all {total} (G, d)"))
    } else {
        let n: usize = differ.iter().map(|s| s.rsplit('(').next().unwrap().trim_end_matches(')').parse::<usize>().unwrap()).sum();
        Err(format!(
            "ℤ/2 split-only and ℤ/7 verdicts hold; case lists match for {} of {total} (G, d). In the others the listed index \
             needs a discriminant class whose q-value Ω_G does not have, e.g. ℤ/4 d = 2 gives {z4d2:?}; per group: {}",
            total - n,
            differ.join(", ")
        ))
    }
}

fn named_isometries(b: &Bundle) -> Outcome {
    let mut done = Vec::new();
    for key in ["Z2", "Z3"] {
        let g = b.group(key).map_err(|e| e.to_string())?;
        let named = g.named.as_ref().ok_or("no catalog entry")?;
        let omega = b.omega(g).map_err(|e| e.to_string())?.omega.lattice();
        let (_, cat) = b.catalog(&named.catalog).map_err(|e| e.to_string())?;
        let target = cat.rescale(named.scale).map_err(|e| e.to_string())?;
        let m = is_isometric(&omega, &target).map_err(|e| e.to_string())?.ok_or(format!("{key}: not isometric"))?;
        ensure(m.transpose().mul(target.gram()).mul(&m) == *omega.gram(), format!("{key}: witness fails"))?;
        done.push(format!("Ω_{key} ≅ {}", named.display));
    }
    Ok(format!("{} with verified witnesses", done.join(", ")))
}

fn corpus(rng: &mut StdRng) -> Vec<Lattice> {
    let mut out: Vec<Lattice> = [
        "A1", "A2", "A3", "A4", "D4", "A2+A2", "A3+A1", "A1^4", "A1(-1)^3", "D4(-1)", "A2(2)+A1(3)",
        "[[2,1],[1,3]]", "[[4,1],[1,2]]", "[[2,0],[0,4]]", "[[6,0],[0,2]]", "[[4,0],[0,4]]",
        "[[2,1,0],[1,2,1],[0,1,4]]", "[[-4,2],[2,-4]]", "<1>+<2>+<3>+<4>", "<7>",
    ]
    .iter()
    .map(|e| Lattice::from_expression(e).expect("corpus expression"))
    .collect();
    while out.len() < 120 {
        let n = rng.gen_range(1..=4);
        let bm = IntMatrix::from_rows(&(0..n).map(|_| (0..n).map(|_| rng.gen_range(-3i64..=3)).collect()).collect::<Vec<Vec<i64>>>());
        let g = bm.transpose().mul(&bm);
        if g.det() == int(0) {
            continue;
        }
        let sign = if rng.gen_bool(0.5) { 1 } else { -1 };
        let l = Lattice::new(g.scale(&int(sign))).unwrap();
        // skewed Grams make the brute-force box astronomically large
        if safe_box_radius(&l, &int(12)).unwrap() <= 6 {
            out.push(l);
        }
    }
    out
}

fn oracles() -> Outcome {
    let mut rng = StdRng::seed_from_u64(20240607);
    let lattices = corpus(&mut rng);
    let mut compared = 0;
    for l in &lattices {
        for bound in 1..=12 {
            let b = int(bound);
            let r = safe_box_radius(l, &b).map_err(|e| e.to_string())?;
            let want = box_vectors(l, &b, r);
            let sv = short_vectors(l, &b).map_err(|e| e.to_string())?;
            let got: Vec<_> = sv.norms.iter().map(|n| n.magnitude().clone().into()).zip(sv.vectors.iter().cloned()).collect();
            ensure(got == want, format!("short vectors differ on {:?} with bound {bound}", l.gram()))?;
            compared += 1;
        }
    }
    for k in 0..1000 {
        let (r, c) = (rng.gen_range(1..=5), rng.gen_range(1..=5));
        let m = IntMatrix::from_rows(&(0..r).map(|_| (0..c).map(|_| rng.gen_range(-9i64..=9)).collect()).collect::<Vec<Vec<i64>>>());
        let s = smith_normal_form(&m);
        ensure(s.u.mul(&m).mul(&s.v) == s.d, format!("U·M·V ≠ D for matrix {k}"))?;
        let diag = s.diagonal();
        let divides = diag.windows(2).all(|w| w[1] == int(0) || (&w[1] % &w[0]) == int(0));
        let diagonal = (0..r).all(|i| (0..c).all(|j| i == j || s.d[(i, j)] == int(0)));
        ensure(divides && diagonal && s.u.det().magnitude().to_string() == "1" && s.v.det().magnitude().to_string() == "1", format!("SNF shape wrong for matrix {k}"))?;
    }
    Ok(format!("{compared} (lattice, bound) pairs over {} corpus lattices agree with box search; SNF holds on 1000 random matrices", lattices.len()))
}

fn main() {
    let b = bundle();
    let mut rep = Report { lines: Vec::new() };
    let s = Duration::from_secs;
    rep.run(1, "table reproduction", s(10), || table_reproduction(&b));
    rep.run(2, "six I4 fibration", s(1), || six_i4(&b));
    rep.run(3, "invariant lattices", s(30), || invariant_lattices(&b));
    rep.run(4, "minimum and generation", s(300), || minima(&b));
    rep.run(5, "discriminant action", s(5), || discriminant_action(&b));
    rep.run(6, "height pairing", s(1), || heights(&b));
    rep.run(7, "overlattice index identities", s(5), || index_identities(&b));
    rep.run(8, "classification", s(30), || classification(&b));
    rep.run(9, "named lattice isometries", s(120), || named_isometries(&b));
    rep.run(10, "oracle equivalence", s(60), oracles);
    let failed: Vec<u32> = rep.lines.iter().filter(|(_, ok)| !ok).map(|(n, _)| *n).collect();
    println!("{} of {} criteria pass", rep.lines.len() - failed.len(), rep.lines.len());
    // 7 and 8 fail against statements the bundled data contradicts; any other
    // failure, or either of these starting to pass, needs a look.
    if failed != [7, 8] {
        eprintln!("unexpected set of failing criteria: {failed:?}");
        std::process::exit(1);
    }
}
