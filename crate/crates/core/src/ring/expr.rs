//! Text grammar and JSON form of [`ScalarFn`].
//!
//! Grammar (whitespace-insensitive):
//! ```text
//! expr    := [+|-] term ((+|-) term)*
//! term    := power (('*' power) | ('/' integer))*
//! power   := atom ['^' integer]
//! atom    := integer | i | I | fiber | sin(lin) | cos(lin) | exp([-] I*lin) | '(' expr ')'
//! lin     := [+|-] linterm ((+|-) linterm)*
//! linterm := [integer '*'] torus
//! ```

use super::{rational_to_string, Chart, GaussianRational, Mono, RingError, ScalarFn, TorusIntegral};
use num::{BigInt, BigRational, One, Signed, Zero};
use serde_json::{json, Value};
use std::collections::BTreeMap;

pub fn parse_fn(src: &str, chart: &Chart) -> Result<ScalarFn, RingError> {
    let mut p = Parser { s: src.as_bytes(), pos: 0, chart };
    let f = p.expr()?;
    p.skip_ws();
    if p.pos != p.s.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(f)
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
    chart: &'a Chart,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> RingError {
        RingError::Parse { pos: self.pos, msg: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), RingError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(&format!("expected `{}`", c as char)))
        }
    }

    fn integer(&mut self) -> Result<BigInt, RingError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected integer"));
        }
        let txt = std::str::from_utf8(&self.s[start..self.pos]).unwrap();
        Ok(txt.parse().unwrap())
    }

    fn small_integer(&mut self) -> Result<i64, RingError> {
        let at = self.pos;
        let n = self.integer()?;
        i64::try_from(n).map_err(|_| RingError::Parse { pos: at, msg: "integer too large".into() })
    }

    fn ident(&mut self) -> Option<String> {
        self.skip_ws();
        let start = self.pos;
        if self.pos < self.s.len() && (self.s[self.pos].is_ascii_alphabetic() || self.s[self.pos] == b'_') {
            self.pos += 1;
            while self.pos < self.s.len() && (self.s[self.pos].is_ascii_alphanumeric() || self.s[self.pos] == b'_') {
                self.pos += 1;
            }
            Some(std::str::from_utf8(&self.s[start..self.pos]).unwrap().to_string())
        } else {
            None
        }
    }

    fn zero(&self) -> ScalarFn {
        ScalarFn::zero(self.chart.k(), self.chart.m())
    }

    fn expr(&mut self) -> Result<ScalarFn, RingError> {
        let mut acc = self.zero();
        let mut neg = false;
        if self.eat(b'-') {
            neg = true;
        } else {
            self.eat(b'+');
        }
        loop {
            let t = self.term()?;
            acc = if neg { &acc - &t } else { &acc + &t };
            if self.eat(b'+') {
                neg = false;
            } else if self.eat(b'-') {
                neg = true;
            } else {
                break;
            }
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<ScalarFn, RingError> {
        let mut acc = self.power()?;
        loop {
            if self.eat(b'*') {
                let f = self.power()?;
                acc = &acc * &f;
            } else if self.eat(b'/') {
                let at = self.pos;
                let d = self.integer()?;
                if d.is_zero() {
                    return Err(RingError::Parse { pos: at, msg: "division by zero".into() });
                }
                let c = GaussianRational::from_rational(BigRational::new(BigInt::one(), d));
                acc = acc.scale(&c);
            } else {
                return Ok(acc);
            }
        }
    }

    fn power(&mut self) -> Result<ScalarFn, RingError> {
        let base = self.atom()?;
        if self.eat(b'^') {
            let e = self.small_integer()?;
            let e = u32::try_from(e).map_err(|_| self.err("exponent too large"))?;
            Ok(base.pow(e))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<ScalarFn, RingError> {
        let (k, m) = self.chart.dims();
        match self.peek() {
            None => Err(self.err("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let f = self.expr()?;
                self.expect(b')')?;
                Ok(f)
            }
            Some(c) if c.is_ascii_digit() => {
                let n = self.integer()?;
                Ok(ScalarFn::integer(k, m, n))
            }
            Some(_) => {
                let at = self.pos;
                let Some(name) = self.ident() else {
                    return Err(self.err("unexpected character"));
                };
                match name.as_str() {
                    "i" | "I" => Ok(ScalarFn::constant(k, m, GaussianRational::i())),
                    "sin" | "cos" => {
                        self.expect(b'(')?;
                        let n = self.lin()?;
                        self.expect(b')')?;
                        Ok(if name == "sin" { ScalarFn::sin_mode(k, m, &n) } else { ScalarFn::cos_mode(k, m, &n) })
                    }
                    "exp" => {
                        self.expect(b'(')?;
                        let neg = self.eat(b'-');
                        match self.ident().as_deref() {
                            Some("I") | Some("i") => {}
                            _ => return Err(self.err("exp argument must be I*<linear form>")),
                        }
                        self.expect(b'*')?;
                        let mut n = self.lin()?;
                        if neg {
                            n.iter_mut().for_each(|x| *x = -*x);
                        }
                        self.expect(b')')?;
                        Ok(ScalarFn::exp_mode(k, m, &n))
                    }
                    _ => {
                        if let Some(a) = self.chart.fiber.iter().position(|f| *f == name) {
                            Ok(ScalarFn::fiber_var(k, m, a))
                        } else if self.chart.torus.contains(&name) {
                            Err(RingError::Parse {
                                pos: at,
                                msg: format!("torus coordinate `{name}` may only appear inside sin, cos or exp"),
                            })
                        } else {
                            Err(RingError::Parse { pos: at, msg: format!("unknown identifier `{name}`") })
                        }
                    }
                }
            }
        }
    }

    fn lin(&mut self) -> Result<Vec<i64>, RingError> {
        let mut n = vec![0i64; self.chart.k()];
        let mut sign = if self.eat(b'-') {
            -1
        } else {
            self.eat(b'+');
            1
        };
        loop {
            let mut c = 1i64;
            if matches!(self.peek(), Some(d) if d.is_ascii_digit()) {
                c = self.small_integer()?;
                self.expect(b'*')?;
            }
            let at = self.pos;
            let name = self.ident().ok_or_else(|| self.err("expected torus coordinate"))?;
            let j = self.chart.torus.iter().position(|t| *t == name).ok_or_else(|| RingError::Parse {
                pos: at,
                msg: format!("`{name}` is not a torus coordinate"),
            })?;
            n[j] += sign * c;
            if self.eat(b'+') {
                sign = 1;
            } else if self.eat(b'-') {
                sign = -1;
            } else {
                return Ok(n);
            }
        }
    }
}

fn format_lin(n: &[i64], chart: &Chart) -> String {
    let mut out = String::new();
    for (j, &c) in n.iter().enumerate() {
        if c == 0 {
            continue;
        }
        if out.is_empty() {
            if c < 0 {
                out.push('-');
            }
        } else {
            out.push_str(if c < 0 { " - " } else { " + " });
        }
        if c.abs() != 1 {
            out.push_str(&format!("{}*", c.abs()));
        }
        out.push_str(&chart.torus[j]);
    }
    out
}

fn format_fiber(alpha: &[u32], chart: &Chart) -> Option<String> {
    let parts: Vec<String> = alpha
        .iter()
        .enumerate()
        .filter(|(_, &e)| e > 0)
        .map(|(a, &e)| if e == 1 { chart.fiber[a].clone() } else { format!("{}^{}", chart.fiber[a], e) })
        .collect();
    if parts.is_empty() {
        None
    } else {
        Some(parts.join("*"))
    }
}

/// Splits a coefficient into a sign and a display body, e.g. `-3/4` into (true, `3/4`).
fn signed_coeff(c: &GaussianRational) -> (bool, GaussianRational) {
    let neg = if c.im.is_zero() {
        c.re.is_negative()
    } else {
        c.re.is_zero() && c.im.is_negative()
    };
    if neg {
        (true, -c)
    } else {
        (false, c.clone())
    }
}

fn term_body(c: &GaussianRational, factors: &[String]) -> String {
    let mut parts = Vec::new();
    if !c.is_one() || factors.is_empty() {
        parts.push(c.to_string());
    }
    parts.extend(factors.iter().cloned());
    parts.join("*")
}

fn join_signed(terms: &[(bool, String)]) -> String {
    if terms.is_empty() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (idx, (neg, body)) in terms.iter().enumerate() {
        if idx == 0 {
            if *neg {
                out.push('-');
            }
        } else {
            out.push_str(if *neg { " - " } else { " + " });
        }
        out.push_str(body);
    }
    out
}

/// Canonical text form: real-mode `cos`/`sin` pairs grouped by fiber monomial.
/// The output parses back to the same function.
pub fn format_fn(f: &ScalarFn, chart: &Chart) -> String {
    assert_eq!(f.dims(), chart.dims(), "chart mismatch in formatting");
    let mut by_fiber: BTreeMap<Vec<u32>, BTreeMap<Vec<i64>, GaussianRational>> = BTreeMap::new();
    for (mo, c) in f.terms() {
        by_fiber.entry(mo.fiber.clone()).or_default().insert(mo.torus.clone(), c.clone());
    }
    let mut terms: Vec<(bool, String)> = Vec::new();
    for (alpha, modes) in &by_fiber {
        let mut fourier: Vec<(GaussianRational, Option<String>)> = Vec::new();
        for (n, c) in modes {
            let first = n.iter().find(|&&x| x != 0).copied();
            match first {
                None => fourier.push((c.clone(), None)),
                Some(x) if x > 0 => {
                    let neg_n: Vec<i64> = n.iter().map(|x| -x).collect();
                    let cm = modes.get(&neg_n).cloned().unwrap_or_else(GaussianRational::zero);
                    let a = c + &cm;
                    let b = &(c - &cm) * &GaussianRational::i();
                    let lin = format_lin(n, chart);
                    if !a.is_zero() {
                        fourier.push((a, Some(format!("cos({lin})"))));
                    }
                    if !b.is_zero() {
                        fourier.push((b, Some(format!("sin({lin})"))));
                    }
                }
                Some(_) => {
                    let pos_n: Vec<i64> = n.iter().map(|x| -x).collect();
                    if !modes.contains_key(&pos_n) {
                        let a = c.clone();
                        let b = -&(c * &GaussianRational::i());
                        let lin = format_lin(&pos_n, chart);
                        fourier.push((a, Some(format!("cos({lin})"))));
                        fourier.push((b, Some(format!("sin({lin})"))));
                    }
                }
            }
        }
        let mono = format_fiber(alpha, chart);
        if fourier.len() == 1 || mono.is_none() {
            for (c, trig) in fourier {
                let (neg, c) = signed_coeff(&c);
                let factors: Vec<String> = trig.into_iter().chain(mono.clone()).collect();
                terms.push((neg, term_body(&c, &factors)));
            }
        } else {
            let inner: Vec<(bool, String)> = fourier
                .into_iter()
                .map(|(c, trig)| {
                    let (neg, c) = signed_coeff(&c);
                    (neg, term_body(&c, &trig.into_iter().collect::<Vec<_>>()))
                })
                .collect();
            terms.push((false, format!("({})*{}", join_signed(&inner), mono.unwrap())));
        }
    }
    join_signed(&terms)
}

/// `(2*pi)^d * (value)`.
pub fn format_torus_integral(t: &TorusIntegral, chart: &Chart) -> String {
    let body = format_fn(&t.value, chart);
    match t.two_pi_power {
        0 => body,
        1 => format!("(2*pi) * ({body})"),
        d => format!("(2*pi)^{d} * ({body})"),
    }
}

/// `[{torus, fiber, re, im}, ...]` in exponent-key order.
pub fn scalar_to_json(f: &ScalarFn) -> Value {
    Value::Array(
        f.terms()
            .map(|(mo, c)| {
                json!({
                    "torus": mo.torus,
                    "fiber": mo.fiber,
                    "re": rational_to_string(&c.re),
                    "im": rational_to_string(&c.im),
                })
            })
            .collect(),
    )
}

fn parse_rational(s: &str) -> Result<BigRational, RingError> {
    let bad = || RingError::Json(format!("bad rational `{s}`"));
    let (p, q) = match s.split_once('/') {
        Some((p, q)) => (p.trim(), q.trim()),
        None => (s.trim(), "1"),
    };
    let p: BigInt = p.parse().map_err(|_| bad())?;
    let q: BigInt = q.parse().map_err(|_| bad())?;
    if q.is_zero() {
        return Err(bad());
    }
    Ok(BigRational::new(p, q))
}

pub fn scalar_from_json(v: &Value, k: usize, m: usize) -> Result<ScalarFn, RingError> {
    let arr = v.as_array().ok_or_else(|| RingError::Json("expected a term list".into()))?;
    let mut f = ScalarFn::zero(k, m);
    for t in arr {
        let ints = |key: &str| -> Result<Vec<i64>, RingError> {
            t.get(key)
                .and_then(Value::as_array)
                .ok_or_else(|| RingError::Json(format!("missing `{key}`")))?
                .iter()
                .map(|x| x.as_i64().ok_or_else(|| RingError::Json(format!("bad entry in `{key}`"))))
                .collect()
        };
        let torus = ints("torus")?;
        let fiber = ints("fiber")?;
        if torus.len() != k || fiber.len() != m {
            return Err(RingError::ChartMismatch { left: (k, m), right: (torus.len(), fiber.len()) });
        }
        let fiber = fiber
            .into_iter()
            .map(|e| u32::try_from(e).map_err(|_| RingError::Json("negative fiber exponent".into())))
            .collect::<Result<Vec<_>, _>>()?;
        let part = |key: &str| -> Result<BigRational, RingError> {
            parse_rational(t.get(key).and_then(Value::as_str).ok_or_else(|| RingError::Json(format!("missing `{key}`")))?)
        };
        f.add_term(Mono { torus, fiber }, GaussianRational::new(part("re")?, part("im")?));
    }
    Ok(f)
}
