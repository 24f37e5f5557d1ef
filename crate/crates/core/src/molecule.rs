//! Molecular Hamiltonians loaded from FCIDUMP integral files.
//!
//! A [`MolecularProblem`] holds the core energy, one-electron integrals
//! `h_ij`, and two-electron repulsion integrals in chemists' notation
//! `(ij|kl)` over spatial orbitals, together with the electron count and
//! spin projection. From these it derives the reference determinant (by an
//! occupation-consistent aufbau sweep), mean-field spin-orbital energies,
//! excitation pools, and the qubit Hamiltonian.

use std::fs;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fermion::{jw_lowering, jw_raising, Determinant, FermionExcitation};
use crate::pauli::{PauliString, QubitOperator};

/// Spatial-orbital integrals and system metadata for one molecule.
#[derive(Clone, Debug)]
pub struct MolecularProblem {
    norb: usize,
    nelec: usize,
    ms2: i32,
    core_energy: f64,
    one_body: Vec<f64>,
    two_body: Vec<f64>,
    reference: Determinant,
    orbital_energies: Vec<f64>,
}

/// Which excitation ranks a pool contains.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum PoolKind {
    /// Particle-hole singles and doubles relative to the reference.
    SinglesDoubles,
    /// Particle-hole excitations of every rank relative to the reference.
    AllParticleHole,
    /// Generalized singles and doubles over all spin orbitals (index sets
    /// disjoint), not referenced to an occupation.
    GeneralizedSinglesDoubles,
}

impl MolecularProblem {
    /// Build a problem directly from integrals. `one_body` is row-major
    /// `norb x norb`; `two_body` holds chemists' `(ij|kl)` with the index
    /// `((i*norb + j)*norb + k)*norb + l`.
    pub fn from_integrals(
        norb: usize,
        nelec: usize,
        ms2: i32,
        core_energy: f64,
        one_body: Vec<f64>,
        two_body: Vec<f64>,
    ) -> Result<Self> {
        if norb == 0 || norb > 32 {
            return Err(Error::Domain(format!(
                "orbital count {norb} outside the supported range 1..=32"
            )));
        }
        if nelec > 2 * norb {
            return Err(Error::Domain(format!(
                "{nelec} electrons cannot occupy {norb} spatial orbitals"
            )));
        }
        if ms2.unsigned_abs() as usize > nelec || (ms2.rem_euclid(2)) != (nelec % 2) as i32 {
            return Err(Error::Domain(format!(
                "spin projection MS2={ms2} is inconsistent with NELEC={nelec}"
            )));
        }
        if one_body.len() != norb * norb || two_body.len() != norb.pow(4) {
            return Err(Error::Domain(
                "integral array lengths do not match the orbital count".into(),
            ));
        }
        let mut problem = MolecularProblem {
            norb,
            nelec,
            ms2,
            core_energy,
            one_body,
            two_body,
            reference: Determinant::empty(),
            orbital_energies: Vec::new(),
        };
        let (reference, orbital_energies) = problem.aufbau_occupation()?;
        problem.reference = reference;
        problem.orbital_energies = orbital_energies;
        Ok(problem)
    }

    /// Parse an FCIDUMP file.
    pub fn from_fcidump_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_fcidump_str(&text, &path.display().to_string())
    }

    /// Parse FCIDUMP-format text. `label` names the source in errors.
    pub fn from_fcidump_str(text: &str, label: &str) -> Result<Self> {
        let parse_err = |line: usize, msg: String| Error::parse(label, line, msg);

        let mut lines = text.lines().enumerate();
        // Namelist header: accumulate until &END or a bare slash.
        let mut header = String::new();
        let mut header_done = false;
        for (_, line) in lines.by_ref() {
            let upper = line.to_uppercase();
            header.push(' ');
            header.push_str(&upper);
            if upper.contains("&END") || upper.contains('/') {
                header_done = true;
                break;
            }
        }
        if !header_done {
            return Err(parse_err(1, "header has no &END terminator".into()));
        }
        if !header.contains("&FCI") {
            return Err(parse_err(1, "missing &FCI namelist header".into()));
        }

        let mut norb: Option<usize> = None;
        let mut nelec: Option<usize> = None;
        let mut ms2: i32 = 0;
        let cleaned = header.replace([',', '='], " ");
        let mut tokens = cleaned.split_whitespace().peekable();
        while let Some(tok) = tokens.next() {
            match tok {
                "NORB" => {
                    norb = Some(next_value(&mut tokens, "NORB", label)?);
                }
                "NELEC" => {
                    nelec = Some(next_value(&mut tokens, "NELEC", label)?);
                }
                "MS2" => {
                    ms2 = next_value(&mut tokens, "MS2", label)?;
                }
                _ => {}
            }
        }
        let norb =
            norb.ok_or_else(|| parse_err(1, "header does not declare NORB".into()))?;
        let nelec =
            nelec.ok_or_else(|| parse_err(1, "header does not declare NELEC".into()))?;
        if norb == 0 || norb > 32 {
            return Err(parse_err(1, format!("NORB={norb} outside supported range 1..=32")));
        }

        let mut core_energy: Option<f64> = None;
        let mut one_body = vec![0.0; norb * norb];
        let mut one_set = vec![false; norb * norb];
        let mut two_body = vec![0.0; norb.pow(4)];
        let mut two_set = vec![false; norb.pow(4)];

        for (i, line) in lines {
            let lineno = i + 1;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            if fields.len() != 5 {
                return Err(parse_err(
                    lineno,
                    format!("expected `value i j k l`, found {} fields", fields.len()),
                ));
            }
            let value: f64 = fields[0]
                .replace(['D', 'd'], "E")
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad numeric value `{}`", fields[0])))?;
            let mut idx = [0usize; 4];
            for (k, f) in fields[1..].iter().enumerate() {
                idx[k] = f
                    .parse()
                    .map_err(|_| parse_err(lineno, format!("bad index `{f}`")))?;
                if idx[k] > norb {
                    return Err(parse_err(
                        lineno,
                        format!("index {} exceeds NORB={norb}", idx[k]),
                    ));
                }
            }
            match idx {
                [0, 0, 0, 0] => {
                    if let Some(prev) = core_energy {
                        if (prev - value).abs() > 1e-12 {
                            return Err(parse_err(
                                lineno,
                                "conflicting duplicate core-energy entries".into(),
                            ));
                        }
                    }
                    core_energy = Some(value);
                }
                [i1, j1, 0, 0] if i1 > 0 && j1 > 0 => {
                    let (i1, j1) = (i1 - 1, j1 - 1);
                    for (a, b) in [(i1, j1), (j1, i1)] {
                        let slot = a * norb + b;
                        if one_set[slot] && (one_body[slot] - value).abs() > 1e-12 {
                            return Err(parse_err(
                                lineno,
                                format!("conflicting duplicate one-electron entry ({},{})", a + 1, b + 1),
                            ));
                        }
                        one_body[slot] = value;
                        one_set[slot] = true;
                    }
                }
                [i1, j1, k1, l1] if i1 > 0 && j1 > 0 && k1 > 0 && l1 > 0 => {
                    let (i1, j1, k1, l1) = (i1 - 1, j1 - 1, k1 - 1, l1 - 1);
                    // Real-orbital eightfold permutational symmetry.
                    let perms = [
                        (i1, j1, k1, l1),
                        (j1, i1, k1, l1),
                        (i1, j1, l1, k1),
                        (j1, i1, l1, k1),
                        (k1, l1, i1, j1),
                        (l1, k1, i1, j1),
                        (k1, l1, j1, i1),
                        (l1, k1, j1, i1),
                    ];
                    for (a, b, c, d) in perms {
                        let slot = ((a * norb + b) * norb + c) * norb + d;
                        if two_set[slot] && (two_body[slot] - value).abs() > 1e-12 {
                            return Err(parse_err(
                                lineno,
                                format!(
                                    "conflicting duplicate two-electron entry ({},{}|{},{})",
                                    a + 1,
                                    b + 1,
                                    c + 1,
                                    d + 1
                                ),
                            ));
                        }
                        two_body[slot] = value;
                        two_set[slot] = true;
                    }
                }
                _ => {
                    return Err(parse_err(
                        lineno,
                        format!("malformed index pattern {idx:?}"),
                    ));
                }
            }
        }

        Self::from_integrals(
            norb,
            nelec,
            ms2,
            core_energy.unwrap_or(0.0),
            one_body,
            two_body,
        )
    }

    pub fn norb(&self) -> usize {
        self.norb
    }

    pub fn nelec(&self) -> usize {
        self.nelec
    }

    pub fn ms2(&self) -> i32 {
        self.ms2
    }

    pub fn num_spin_orbitals(&self) -> usize {
        2 * self.norb
    }

    pub fn num_qubits(&self) -> usize {
        2 * self.norb
    }

    pub fn num_alpha(&self) -> usize {
        (self.nelec as i32 + self.ms2) as usize / 2
    }

    pub fn num_beta(&self) -> usize {
        (self.nelec as i32 - self.ms2) as usize / 2
    }

    pub fn core_energy(&self) -> f64 {
        self.core_energy
    }

    /// One-electron integral over spatial orbitals.
    pub fn h(&self, i: usize, j: usize) -> f64 {
        self.one_body[i * self.norb + j]
    }

    /// Two-electron integral `(ij|kl)` in chemists' notation over spatial
    /// orbitals.
    pub fn eri(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.two_body[((i * self.norb + j) * self.norb + k) * self.norb + l]
    }

    /// Antisymmetrized two-electron integral `<pq||rs>` over spin orbitals.
    pub fn anti(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        let same_spin = |a: usize, b: usize| a % 2 == b % 2;
        let sp = |a: usize| a / 2;
        let mut v = 0.0;
        if same_spin(p, r) && same_spin(q, s) {
            v += self.eri(sp(p), sp(r), sp(q), sp(s));
        }
        if same_spin(p, s) && same_spin(q, r) {
            v -= self.eri(sp(p), sp(s), sp(q), sp(r));
        }
        v
    }

    /// Spin-orbital one-electron integral (diagonal in spin).
    pub fn h_spin(&self, p: usize, q: usize) -> f64 {
        if p % 2 == q % 2 {
            self.h(p / 2, q / 2)
        } else {
            0.0
        }
    }

    /// The aufbau reference determinant.
    pub fn reference(&self) -> Determinant {
        self.reference
    }

    /// Mean-field spin-orbital energies for the reference occupation.
    pub fn orbital_energies(&self) -> &[f64] {
        &self.orbital_energies
    }

    /// Mean-field energy of the reference determinant, from the integrals.
    pub fn reference_energy(&self) -> f64 {
        self.occupation_energy(&self.reference.occupied())
    }

    fn occupation_energy(&self, occ: &[usize]) -> f64 {
        let mut e = self.core_energy;
        for &i in occ {
            e += self.h_spin(i, i);
        }
        for &i in occ {
            for &j in occ {
                e += 0.5 * self.anti(i, j, i, j);
            }
        }
        e
    }

    /// Spin-orbital energies in the mean field of the given occupation:
    /// eps_p = h_pp + sum_i <pi||pi>.
    fn mean_field_energies(&self, occ: &[usize]) -> Vec<f64> {
        (0..self.num_spin_orbitals())
            .map(|p| {
                self.h_spin(p, p)
                    + occ.iter().map(|&i| self.anti(p, i, p, i)).sum::<f64>()
            })
            .collect()
    }

    /// Moller-Plesset denominator for an excitation: occupied energies
    /// minus virtual energies.
    pub fn mp_denominator(&self, exc: &FermionExcitation) -> f64 {
        let holes: f64 = exc.holes().iter().map(|&h| self.orbital_energies[h]).sum();
        let parts: f64 = exc
            .particles()
            .iter()
            .map(|&p| self.orbital_energies[p])
            .sum();
        holes - parts
    }

    /// Determine the reference occupation self-consistently: occupy the
    /// lowest mean-field spin orbitals per spin channel, recompute the
    /// orbital energies in that field, and repeat to a fixed point.
    fn aufbau_occupation(&self) -> Result<(Determinant, Vec<f64>)> {
        let nso = self.num_spin_orbitals();
        let (na, nb) = (self.num_alpha(), self.num_beta());

        let fill = |eps: &[f64]| -> Result<Determinant> {
            let mut occ = Vec::with_capacity(self.nelec);
            for (spin, count) in [(0usize, na), (1usize, nb)] {
                let mut channel: Vec<usize> = (0..nso).filter(|p| p % 2 == spin).collect();
                channel.sort_by(|&a, &b| {
                    eps[a].partial_cmp(&eps[b]).expect("finite energies").then(a.cmp(&b))
                });
                if count > 0 && count < channel.len() {
                    let gap = eps[channel[count]] - eps[channel[count - 1]];
                    if gap.abs() < 1e-8 {
                        return Err(Error::Domain(format!(
                            "degenerate frontier orbitals (gap {gap:.3e}); \
                             the aufbau occupation is ambiguous"
                        )));
                    }
                }
                occ.extend(&channel[..count]);
            }
            Ok(Determinant::from_occupied(&occ))
        };

        // Seed with bare one-electron diagonals and iterate to a fixed
        // point. If the iteration cycles (possible when near-degenerate
        // fragments trade electrons each sweep), fall through to the
        // exhaustive search for a self-consistent filling.
        let seed: Vec<f64> = (0..nso).map(|p| self.h_spin(p, p)).collect();
        if let Ok(start) = fill(&seed) {
            let mut det = start;
            let mut seen = vec![det];
            for _ in 0..64 {
                let eps = self.mean_field_energies(&det.occupied());
                let Ok(next) = fill(&eps) else { break };
                if next == det {
                    return Ok((det, eps));
                }
                if seen.contains(&next) {
                    break;
                }
                seen.push(next);
                det = next;
            }
        }
        self.aufbau_by_search()
    }

    /// Enumerate every Sz-respecting occupation and keep those that are
    /// self-consistent (each occupied spin orbital lies below every virtual
    /// one in its own mean field, with a clear frontier gap). Among the
    /// survivors, the lowest-energy filling is the reference.
    fn aufbau_by_search(&self) -> Result<(Determinant, Vec<f64>)> {
        let nso = self.num_spin_orbitals();
        let (na, nb) = (self.num_alpha(), self.num_beta());
        let alpha: Vec<usize> = (0..nso).filter(|p| p % 2 == 0).collect();
        let beta: Vec<usize> = (0..nso).filter(|p| p % 2 == 1).collect();

        let n_candidates = binomial(alpha.len(), na) * binomial(beta.len(), nb);
        if n_candidates > 200_000 {
            return Err(Error::Domain(format!(
                "aufbau iteration did not settle and the occupation space is \
                 too large to search exhaustively ({n_candidates} candidates)"
            )));
        }

        let mut best: Option<(f64, Determinant, Vec<f64>)> = None;
        let mut saw_degenerate_frontier = false;
        for a_occ in combinations(&alpha, na) {
            for b_occ in combinations(&beta, nb) {
                let mut occ = a_occ.clone();
                occ.extend(&b_occ);
                let eps = self.mean_field_energies(&occ);
                let mut consistent = true;
                for channel in [&alpha, &beta] {
                    let mut top = f64::NEG_INFINITY;
                    let mut bottom = f64::INFINITY;
                    for &p in channel.iter() {
                        if occ.contains(&p) {
                            top = top.max(eps[p]);
                        } else {
                            bottom = bottom.min(eps[p]);
                        }
                    }
                    if bottom - top < 1e-8 {
                        if bottom > top {
                            saw_degenerate_frontier = true;
                        }
                        consistent = false;
                        break;
                    }
                }
                if !consistent {
                    continue;
                }
                let energy = self.occupation_energy(&occ);
                let det = Determinant::from_occupied(&occ);
                let better = match &best {
                    None => true,
                    Some((e, d, _)) => {
                        energy < e - 1e-12 || ((energy - e).abs() <= 1e-12 && det.bits() < d.bits())
                    }
                };
                if better {
                    best = Some((energy, det, eps));
                }
            }
        }
        match best {
            Some((_, det, eps)) => Ok((det, eps)),
            None if saw_degenerate_frontier => Err(Error::Domain(
                "degenerate frontier orbitals; the aufbau occupation is ambiguous".into(),
            )),
            None => Err(Error::Domain(
                "no self-consistent aufbau occupation exists".into(),
            )),
        }
    }

    /// The qubit-encoded Hamiltonian. Real coefficients by construction;
    /// the encoding maps occupied spin orbitals to `|1>` qubits.
    pub fn jw_hamiltonian(&self) -> Result<QubitOperator> {
        let n = self.num_qubits();
        let mut terms: Vec<(Complex64, PauliString)> =
            vec![(Complex64::new(self.core_energy, 0.0), PauliString::identity())];

        for p in 0..2 * self.norb {
            for q in 0..2 * self.norb {
                let hpq = self.h_spin(p, q);
                if hpq.abs() < 1e-14 {
                    continue;
                }
                let op = jw_raising(n, p).mul(&jw_lowering(n, q))?;
                terms.extend(
                    op.terms()
                        .iter()
                        .map(|(c, s)| (c * hpq, *s)),
                );
            }
        }

        // Sum over ordered pairs p<q, r<s of <pq||rs> a+_p a+_q a_s a_r.
        for p in 0..2 * self.norb {
            for q in p + 1..2 * self.norb {
                for r in 0..2 * self.norb {
                    for s in r + 1..2 * self.norb {
                        let v = self.anti(p, q, r, s);
                        if v.abs() < 1e-14 {
                            continue;
                        }
                        let op = jw_raising(n, p)
                            .mul(&jw_raising(n, q))?
                            .mul(&jw_lowering(n, s))?
                            .mul(&jw_lowering(n, r))?;
                        terms.extend(op.terms().iter().map(|(c, t)| (c * v, *t)));
                    }
                }
            }
        }

        QubitOperator::from_terms(n, terms)
    }

    /// Enumerate a spin-conserving excitation pool, ordered ascending by the
    /// integer label of each operator's excited determinant (the reference
    /// bits with holes cleared and particles set). Generalized operators
    /// need not act within the reference's particle-hole partition, so for
    /// them the label is the XOR image and ties break on the index lists.
    pub fn enumerate_pool(&self, max_rank: usize, kind: PoolKind) -> Result<Vec<FermionExcitation>> {
        if max_rank == 0 {
            return Ok(Vec::new());
        }
        let particle_hole =
            matches!(kind, PoolKind::SinglesDoubles | PoolKind::AllParticleHole);
        if particle_hole && max_rank > self.nelec {
            return Err(Error::Domain(format!(
                "rank-{max_rank} particle-hole excitations do not exist with \
                 {} electrons",
                self.nelec
            )));
        }
        let mut pool = match kind {
            PoolKind::SinglesDoubles => self.particle_hole_pool(max_rank.min(2)),
            PoolKind::AllParticleHole => self.particle_hole_pool(max_rank),
            PoolKind::GeneralizedSinglesDoubles => self.generalized_pool(max_rank.min(2)),
        };
        let reference = self.reference.bits();
        pool.sort_by_key(|exc| {
            let image = reference ^ index_mask(exc.holes()) ^ index_mask(exc.particles());
            (image, exc.holes().to_vec(), exc.particles().to_vec())
        });
        Ok(pool)
    }

    fn particle_hole_pool(&self, max_rank: usize) -> Vec<FermionExcitation> {
        let occ = self.reference.occupied();
        let nso = self.num_spin_orbitals();
        let virt: Vec<usize> = (0..nso).filter(|p| !self.reference.is_occupied(*p)).collect();
        let mut pool = Vec::new();
        for rank in 1..=max_rank {
            for holes in combinations(&occ, rank) {
                for particles in combinations(&virt, rank) {
                    let exc = FermionExcitation::new(holes.clone(), particles)
                        .expect("disjoint occupied/virtual index sets");
                    if exc.sz_twice_change() == 0 {
                        pool.push(exc);
                    }
                }
            }
        }
        pool
    }

    fn generalized_pool(&self, max_rank: usize) -> Vec<FermionExcitation> {
        let nso = self.num_spin_orbitals();
        let all: Vec<usize> = (0..nso).collect();
        let mut pool = Vec::new();
        for rank in 1..=max_rank {
            for holes in combinations(&all, rank) {
                for particles in combinations(&all, rank) {
                    if holes.iter().any(|h| particles.contains(h)) {
                        continue;
                    }
                    // Keep one representative per adjoint pair.
                    if holes > particles {
                        continue;
                    }
                    let exc = FermionExcitation::new(holes.clone(), particles)
                        .expect("disjoint index sets");
                    if exc.sz_twice_change() == 0 {
                        pool.push(exc);
                    }
                }
            }
        }
        pool
    }
}

fn index_mask(indices: &[usize]) -> u64 {
    indices.iter().fold(0u64, |m, &i| m | 1 << i)
}

fn next_value<T: std::str::FromStr>(
    tokens: &mut std::iter::Peekable<std::str::SplitWhitespace<'_>>,
    key: &str,
    label: &str,
) -> Result<T> {
    tokens
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::parse(label, 1, format!("header key {key} has no numeric value")))
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: usize = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// All size-`k` ascending combinations of `items`.
fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut stack = vec![(0usize, Vec::with_capacity(k))];
    while let Some((start, cur)) = stack.pop() {
        if cur.len() == k {
            out.push(cur);
            continue;
        }
        // Push in reverse so the output is lexicographic.
        let need = k - cur.len();
        for i in (start..=items.len().saturating_sub(need)).rev() {
            let mut next = cur.clone();
            next.push(items[i]);
            stack.push((i + 1, next));
        }
    }
    out
}
