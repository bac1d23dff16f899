use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::table::{Schema, Table};
use crate::error::{Error, Result};
use crate::prob::{entropy_bits, Axis, Channel, DistortionSpec, Role};

/// Release one output symbol per row, drawn from `c` given the row's private
/// and public symbols (schema order, row-major product index).
///
/// Row `i` uses its own ChaCha stream `i` under `seed`, so the result does not
/// depend on evaluation order. The output table has a single reconstruction
/// column named after the channel output.
pub fn sanitize(t: &Table, c: &Channel, seed: u64) -> Result<Table> {
    let enc = t.schema().encoder_columns();
    let nx = t.schema().product_size(&enc);
    if c.n_in() != nx {
        return Err(Error::AlphabetMismatch {
            expected: nx,
            found: c.n_in(),
        });
    }
    let out = c.output();
    let schema = Schema::new(vec![Axis::new(
        out.name.clone(),
        Role::Reconstruction,
        out.alphabet.clone(),
    )])?;
    let mut cells = Vec::with_capacity(t.n_rows());
    for i in 0..t.n_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        cells.push(draw(c.row(t.index_of(i, &enc)), rng.random::<f64>()));
    }
    Table::from_cells(schema, cells)
}

fn draw(row: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (j, &p) in row.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = j;
            if u < acc {
                return j;
            }
        }
    }
    last
}

/// A sanitized release together with what produced it.
#[derive(Debug, Clone)]
pub struct SanitizationRun<'a> {
    pub input: &'a Table,
    pub channel: Channel,
    /// `decoder[u * n_z + z]`: reconstruction for released symbol `u` and the
    /// row's side information `z`. `None` when the release already is the
    /// reconstruction.
    pub decoder: Option<Vec<usize>>,
    pub seed: u64,
    pub output: Table,
}

impl<'a> SanitizationRun<'a> {
    pub fn new(input: &'a Table, channel: Channel, seed: u64) -> Result<Self> {
        let output = sanitize(input, &channel, seed)?;
        Ok(SanitizationRun {
            input,
            channel,
            decoder: None,
            seed,
            output,
        })
    }

    pub fn with_decoder(mut self, decoder: Vec<usize>) -> Result<Self> {
        let nz = self.side_size();
        let want = self.channel.n_out() * nz;
        if decoder.len() != want {
            return Err(Error::AlphabetMismatch {
                expected: want,
                found: decoder.len(),
            });
        }
        self.decoder = Some(decoder);
        Ok(self)
    }

    fn side_size(&self) -> usize {
        let s = self.input.schema();
        s.product_size(&s.columns_where(|r| r == Role::SideInfo))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub n: usize,
    pub empirical_distortion: f64,
    /// Plug-in `H(X_h | release, Z)` from row counts; biased low by roughly
    /// the alphabet size over `n`.
    pub plug_in_equivocation: f64,
    /// Expected distortion of the channel on the empirical input law.
    pub theoretical_distortion: f64,
    /// `H(X_h | U, Z)` of the channel on the empirical input law.
    pub theoretical_equivocation: f64,
}

/// Compare the realized release against its expected behaviour.
pub fn measure(run: &SanitizationRun, d: &DistortionSpec) -> Result<RunMetrics> {
    let t = run.input;
    let s = t.schema();
    let enc = s.encoder_columns();
    let private = s.columns_where(Role::is_private);
    let public = s.columns_where(Role::is_public);
    let side = s.columns_where(|r| r == Role::SideInfo);
    let (nx, nh, nr, nz) = (
        s.product_size(&enc),
        s.product_size(&private),
        s.product_size(&public),
        s.product_size(&side),
    );
    let nu = run.channel.n_out();
    if run.output.n_rows() != t.n_rows() {
        return Err(Error::invalid("input and output row counts differ"));
    }
    if d.rows() != nr {
        return Err(Error::AlphabetMismatch {
            expected: nr,
            found: d.rows(),
        });
    }
    let decode = |u: usize, z: usize| match &run.decoder {
        Some(g) => g[u * nz + z],
        None => u,
    };
    let n_rec = if run.decoder.is_some() {
        run.decoder.iter().flatten().max().map_or(0, |m| m + 1)
    } else {
        nu
    };
    if n_rec > d.cols() {
        return Err(Error::AlphabetMismatch {
            expected: d.cols(),
            found: n_rec,
        });
    }

    let n = t.n_rows();
    let mut dist = 0.0;
    let mut huz = vec![0u64; nh * nu * nz];
    // empirical law of (x, z) for the theoretical values
    let mut pxz = vec![0.0; nx * nz];
    let mut x_to_hr = vec![(0usize, 0usize); nx];
    for i in 0..n {
        let (x, h, r, z) = (
            t.index_of(i, &enc),
            t.index_of(i, &private),
            t.index_of(i, &public),
            t.index_of(i, &side),
        );
        let u = run.output.row(i)[0];
        dist += d.get(r, decode(u, z));
        huz[(h * nu + u) * nz + z] += 1;
        pxz[x * nz + z] += 1.0 / n as f64;
        x_to_hr[x] = (h, r);
    }
    let plug_in_equivocation = cond_entropy_counts(&huz, nh, nu * nz, n as f64);

    let mut theo_d = 0.0;
    let mut phuz = vec![0.0; nh * nu * nz];
    for x in 0..nx {
        let (h, r) = x_to_hr[x];
        for z in 0..nz {
            let p = pxz[x * nz + z];
            if p == 0.0 {
                continue;
            }
            for u in 0..nu {
                let q = p * run.channel.get(x, u);
                theo_d += q * d.get(r, decode(u, z));
                phuz[(h * nu + u) * nz + z] += q;
            }
        }
    }
    let theoretical_equivocation = cond_entropy(&phuz, nh, nu * nz);
    Ok(RunMetrics {
        n,
        empirical_distortion: dist / n as f64,
        plug_in_equivocation,
        theoretical_distortion: theo_d,
        theoretical_equivocation,
    })
}

fn cond_entropy_counts(counts: &[u64], na: usize, nb: usize, n: f64) -> f64 {
    let p: Vec<f64> = counts.iter().map(|&c| c as f64 / n).collect();
    cond_entropy(&p, na, nb)
}

/// `H(A | B)` from a row-major `na x nb` joint.
fn cond_entropy(p: &[f64], na: usize, nb: usize) -> f64 {
    let mut pb = vec![0.0; nb];
    for a in 0..na {
        for b in 0..nb {
            pb[b] += p[a * nb + b];
        }
    }
    (entropy_bits(p) - entropy_bits(&pb)).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::Alphabet;

    fn census_table(rows: &[usize], k: usize) -> Table {
        let s = Schema::new(vec![Axis::new(
            "x",
            Role::Both,
            Alphabet::indexed(k).unwrap(),
        )])
        .unwrap();
        Table::new(s, rows.iter().map(|&r| vec![r]).collect()).unwrap()
    }

    #[test]
    fn identity_release_copies_column() {
        let t = census_table(&[0, 2, 1, 1, 0], 3);
        let id = Channel::identity(&Alphabet::indexed(3).unwrap());
        let run = SanitizationRun::new(&t, id, 9).unwrap();
        assert_eq!(
            run.output.column(0).collect::<Vec<_>>(),
            vec![0, 2, 1, 1, 0]
        );
        assert_eq!(run.output.schema().attributes[0].role, Role::Reconstruction);
        let m = measure(&run, &DistortionSpec::hamming(3)).unwrap();
        assert_eq!(m.empirical_distortion, 0.0);
        assert_eq!(m.plug_in_equivocation, 0.0);
        assert_eq!(m.theoretical_distortion, 0.0);
    }

    #[test]
    fn constant_release_keeps_all_uncertainty() {
        let t = census_table(&[0, 2, 1, 1, 0, 0], 3);
        let c = Channel::from_rows(&vec![vec![0.0, 1.0, 0.0]; 3]).unwrap();
        let run = SanitizationRun::new(&t, c, 1).unwrap();
        assert!(run.output.column(0).all(|v| v == 1));
        let m = measure(&run, &DistortionSpec::hamming(3)).unwrap();
        let h = entropy_bits(&[0.5, 2.0 / 6.0, 1.0 / 6.0]);
        assert!((m.plug_in_equivocation - h).abs() < 1e-12);
        assert!((m.theoretical_equivocation - h).abs() < 1e-12);
        assert!((m.empirical_distortion - 4.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn seeded_release_is_reproducible() {
        let t = census_table(&[0, 1, 2, 0, 1, 2, 0, 1], 3);
        let c = Channel::from_rows(&vec![vec![0.5, 0.3, 0.2]; 3]).unwrap();
        let a = sanitize(&t, &c, 77).unwrap();
        let b = sanitize(&t, &c, 77).unwrap();
        assert_eq!(a, b);
        let big = census_table(&[0; 64], 3);
        assert_ne!(
            sanitize(&big, &c, 77).unwrap(),
            sanitize(&big, &c, 78).unwrap()
        );
    }

    #[test]
    fn mismatched_channel_is_rejected() {
        let t = census_table(&[0, 1], 3);
        let c = Channel::from_rows(&[vec![1.0], vec![1.0]]).unwrap();
        assert!(matches!(
            sanitize(&t, &c, 0),
            Err(Error::AlphabetMismatch { .. })
        ));
    }

    #[test]
    fn decoder_uses_side_column() {
        // u is constant; the decoder copies z
        let s = Schema::new(vec![
            Axis::new("x", Role::Both, Alphabet::indexed(2).unwrap()),
            Axis::new("z", Role::SideInfo, Alphabet::indexed(2).unwrap()),
        ])
        .unwrap();
        let t = Table::new(s, vec![vec![0, 0], vec![1, 1], vec![1, 0], vec![0, 0]]).unwrap();
        let c = Channel::from_rows(&[vec![1.0], vec![1.0]]).unwrap();
        let run = SanitizationRun::new(&t, c, 0)
            .unwrap()
            .with_decoder(vec![0, 1])
            .unwrap();
        let m = measure(&run, &DistortionSpec::hamming(2)).unwrap();
        assert!((m.empirical_distortion - 0.25).abs() < 1e-12);
        assert!((m.theoretical_distortion - 0.25).abs() < 1e-12);
        // H(X | Z): z=0 has x in {0,1,0}, z=1 has x=1
        let want = 0.75 * entropy_bits(&[2.0 / 3.0, 1.0 / 3.0]);
        assert!((m.plug_in_equivocation - want).abs() < 1e-12);
        assert!(
            SanitizationRun::new(&t, Channel::from_rows(&[vec![1.0], vec![1.0]]).unwrap(), 0)
                .unwrap()
                .with_decoder(vec![0])
                .is_err()
        );
    }
}
