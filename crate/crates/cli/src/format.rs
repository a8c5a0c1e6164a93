/// `x` to `digits` significant figures, fixed notation for moderate
/// magnitudes and exponent notation otherwise. Trailing zeros are dropped.
pub fn sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let exp: i32 = sci.split_once('e').map(|(_, e)| e.parse().unwrap_or(0)).unwrap_or(0);
    if exp < -4 || exp >= digits as i32 {
        let (mantissa, e) = sci.split_once('e').unwrap_or((&sci, "0"));
        return format!("{}e{e}", trim_zeros(mantissa));
    }
    trim_zeros(&format!("{:.*}", (digits as i32 - 1 - exp).max(0) as usize, x)).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn sig6(x: f64) -> String {
    sig(x, 6)
}
