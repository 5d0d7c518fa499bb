// Reference (W, p) from scipy.stats.shapiro 1.15.3.

pub struct Fixture {
    pub name: &'static str,
    pub data: Vec<f64>,
    pub w: f64,
    pub p: f64,
}

pub fn all() -> Vec<Fixture> {
    vec![
        Fixture {
            name: "weights11",
            data: vec![148., 154., 158., 160., 161., 162., 166., 170., 182., 195., 236.],
            w: 0.7888146948631716,
            p: 0.006703814061898823,
        },
        Fixture {
            name: "small3",
            data: vec![2.1, 3.7, 3.9],
            w: 0.8321917808219178,
            p: 0.1939175214814527,
        },
        Fixture {
            name: "sine50",
            data: (0..50).map(|i| (1.7 * i as f64).sin() + 0.1 * i as f64).collect(),
            w: 0.9769757256304654,
            p: 0.43262869276932103,
        },
        Fixture {
            name: "expq30",
            data: (0..30).map(|i| -(1.0 - (i as f64 + 0.5) / 30.0).ln()).collect(),
            w: 0.8467233698667256,
            p: 0.0005298399973178493,
        },
        Fixture {
            name: "logistic200",
            data: (0..200)
                .map(|i| {
                    let x = i as f64;
                    ((x + 0.5) / (199.5 - x)).ln() + 0.3 * x.cos()
                })
                .collect(),
            w: 0.9953192384542606,
            p: 0.7956665661322513,
        },
        Fixture {
            name: "golden1000",
            data: (0..1000).map(|i| (i as f64 * 0.6180339887498949) % 1.0).collect(),
            w: 0.9549017536618246,
            p: 5.62421773118666e-17,
        },
    ]
}
