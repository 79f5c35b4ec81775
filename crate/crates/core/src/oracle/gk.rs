//! Adaptive Gauss–Kronrod (7, 15) for vector-valued integrands.

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_3,
    0.949_107_912_342_758_524_526_189_684_047_9,
    0.864_864_423_359_769_072_789_712_788_640_9,
    0.741_531_185_599_394_439_863_864_773_280_8,
    0.586_087_235_467_691_130_294_144_845_693_0,
    0.405_845_151_377_397_166_906_606_412_076_96,
    0.207_784_955_007_898_467_600_689_403_773_2,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_97,
    0.063_092_092_629_978_553_290_700_663_189_2,
    0.104_790_010_322_250_183_839_876_322_541_5,
    0.140_653_259_715_525_918_745_189_590_510_2,
    0.169_004_726_639_267_902_826_583_426_598_6,
    0.190_350_578_064_785_409_913_256_402_421_0,
    0.204_432_940_075_298_892_414_161_999_234_6,
    0.209_482_141_084_727_828_012_999_174_891_7,
];
/// Gauss weights for the odd Kronrod nodes 1, 3, 5 and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_1,
    0.279_705_391_489_276_667_901_467_771_423_8,
    0.381_830_050_505_118_944_950_369_775_488_98,
    0.417_959_183_673_469_387_755_102_040_816_3,
];

/// Subinterval budget for one call.
const MAX_INTERVALS: usize = 2000;

struct Piece<const N: usize> {
    lo: f64,
    hi: f64,
    value: [f64; N],
    err: f64,
}

fn rule<const N: usize>(a: f64, b: f64, f: &mut impl FnMut(f64) -> [f64; N]) -> ([f64; N], f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut k = [0.0; N];
    let mut g = [0.0; N];
    let fc = f(c);
    for n in 0..N {
        k[n] = WGK[7] * fc[n];
        g[n] = WG[3] * fc[n];
    }
    for j in 0..7 {
        let f1 = f(c - h * XGK[j]);
        let f2 = f(c + h * XGK[j]);
        for n in 0..N {
            let s = f1[n] + f2[n];
            k[n] += WGK[j] * s;
            if j % 2 == 1 {
                g[n] += WG[j / 2] * s;
            }
        }
    }
    let mut err: f64 = 0.0;
    for n in 0..N {
        k[n] *= h;
        err = err.max((k[n] - g[n] * h).abs());
    }
    (k, err)
}

/// Globally adaptive G7K15 on `[a, b]`. Stops when the summed error
/// estimate is below `tol` times the largest component of the integral.
/// The flag is false if the interval budget ran out first.
pub(crate) fn integrate<const N: usize>(
    a: f64,
    b: f64,
    tol: f64,
    f: &mut impl FnMut(f64) -> [f64; N],
) -> ([f64; N], bool) {
    if b <= a {
        return ([0.0; N], true);
    }
    let (value, err) = rule(a, b, f);
    let mut pieces = vec![Piece { lo: a, hi: b, value, err }];
    loop {
        let mut total = [0.0; N];
        let mut err = 0.0;
        let mut worst = 0;
        for (i, p) in pieces.iter().enumerate() {
            for n in 0..N {
                total[n] += p.value[n];
            }
            err += p.err;
            if p.err > pieces[worst].err {
                worst = i;
            }
        }
        let scale = total.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if err <= tol * scale || err == 0.0 {
            return (total, true);
        }
        let p = &pieces[worst];
        let (lo, hi) = (p.lo, p.hi);
        let mid = 0.5 * (lo + hi);
        if pieces.len() >= MAX_INTERVALS || mid <= lo || mid >= hi {
            return (total, false);
        }
        let (v1, e1) = rule(lo, mid, f);
        let (v2, e2) = rule(mid, hi, f);
        pieces[worst] = Piece { lo, hi: mid, value: v1, err: e1 };
        pieces.push(Piece { lo: mid, hi, value: v2, err: e2 });
    }
}

/// `integrate` over `[a, b]` split at the given interior points.
pub(crate) fn integrate_pieces<const N: usize>(
    a: f64,
    b: f64,
    breaks: &[f64],
    tol: f64,
    f: &mut impl FnMut(f64) -> [f64; N],
) -> ([f64; N], bool) {
    let mut pts = vec![a];
    pts.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    pts.push(b);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut total = [0.0; N];
    let mut ok = true;
    for w in pts.windows(2) {
        let (v, good) = integrate(w[0], w[1], tol, f);
        ok &= good;
        for n in 0..N {
            total[n] += v[n];
        }
    }
    (total, ok)
}
