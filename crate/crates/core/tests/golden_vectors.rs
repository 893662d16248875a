//! Frozen golden records for the binary trace format.
//!
//! Each vector is checked three ways: the production encoder must emit
//! the frozen bytes, an independent bit-string oracle must derive the
//! same bytes from the layout table, and the decoder must return the
//! original report. The hex constants pin the format across releases.

use fbsd_core::codec::{decode_report, encode_report};
use fbsd_core::model::{
    BandIndicator, CellIdentity, Cgi, MeasurementReport, NeighborResult, Plmn, SignalMeasurement,
};

/// Minimal independent oracle: append big-endian bit fields to a string
/// of '0'/'1', then pack bytes. Shares nothing with the production
/// bit writer.
#[derive(Default)]
struct BitString(String);

impl BitString {
    fn put(&mut self, value: u64, width: usize) {
        assert!(
            width == 64 || value < (1 << width),
            "{value} overflows {width} bits"
        );
        self.0.push_str(&format!("{value:0width$b}"));
    }

    fn bytes(mut self) -> Vec<u8> {
        while !self.0.len().is_multiple_of(8) {
            self.0.push('0');
        }
        self.0
            .as_bytes()
            .chunks(8)
            .map(|chunk| {
                chunk
                    .iter()
                    .fold(0u8, |acc, &bit| (acc << 1) | u8::from(bit == b'1'))
            })
            .collect()
    }
}

fn oracle_pack(report: &MeasurementReport) -> Vec<u8> {
    let mut bits = BitString::default();
    bits.put(report.timestamp_ms, 64);
    bits.put(u64::from(report.collector_pci), 9);
    bits.put(u64::from(report.collector_earfcn), 18);
    bits.put(u64::from(report.meas_id - 1), 5);
    bits.put(u64::from(report.pcell.rsrp_coded.unwrap()), 7);
    bits.put(u64::from(report.pcell.rsrq_coded.unwrap()), 6);
    if report.neighbors.is_empty() {
        bits.put(0, 1);
        return bits.bytes();
    }
    bits.put(1, 1);
    let first_rat = report.neighbors[0].identity.rat();
    bits.put(
        if first_rat == fbsd_core::RatType::Eutra {
            0
        } else {
            1
        },
        2,
    );
    bits.put(report.neighbors.len() as u64 - 1, 3);
    for neighbor in &report.neighbors {
        match neighbor.identity {
            CellIdentity::Eutra { pci, .. } => {
                bits.put(u64::from(pci), 9);
                bits.put(u64::from(neighbor.signal.rsrp_coded.is_some()), 1);
                bits.put(u64::from(neighbor.signal.rsrq_coded.is_some()), 1);
                if let Some(v) = neighbor.signal.rsrp_coded {
                    bits.put(u64::from(v), 7);
                }
                if let Some(v) = neighbor.signal.rsrq_coded {
                    bits.put(u64::from(v), 6);
                }
            }
            CellIdentity::Gera {
                arfcn,
                band,
                ncc,
                bcc,
                cgi,
            } => {
                bits.put(u64::from(arfcn), 10);
                bits.put(u64::from(band == BandIndicator::Pcs1900), 1);
                bits.put(u64::from(ncc), 3);
                bits.put(u64::from(bcc), 3);
                match cgi {
                    None => bits.put(0, 1),
                    Some(cgi) => {
                        bits.put(1, 1);
                        for d in cgi.plmn.mcc_digits() {
                            bits.put(u64::from(d), 4);
                        }
                        bits.put(u64::from(cgi.plmn.mnc_is_3digit), 1);
                        for d in cgi.plmn.mnc_digits() {
                            bits.put(u64::from(d), 4);
                        }
                        bits.put(u64::from(cgi.lac), 16);
                        bits.put(u64::from(cgi.cell_identity), 16);
                    }
                }
                bits.put(u64::from(neighbor.signal.rssi_coded.unwrap()), 6);
            }
            _ => unreachable!(),
        }
    }
    bits.bytes()
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn check_golden(report: MeasurementReport, frozen_hex: &str) {
    let encoded = encode_report(&report).expect("golden reports are valid");
    assert_eq!(hex(&encoded), frozen_hex, "frozen bytes changed");
    assert_eq!(
        hex(&oracle_pack(&report)),
        frozen_hex,
        "oracle disagrees with frozen bytes"
    );
    assert_eq!(
        decode_report(&encoded).unwrap(),
        report,
        "decode inverts encode"
    );
}

fn eutra_neighbor(pci: u16, earfcn: u32, rsrp: Option<u8>, rsrq: Option<u8>) -> NeighborResult {
    NeighborResult {
        identity: CellIdentity::Eutra {
            pci,
            earfcn,
            cgi: None,
        },
        signal: SignalMeasurement {
            rsrp_coded: rsrp,
            rsrq_coded: rsrq,
            ..Default::default()
        },
    }
}

#[test]
fn golden_no_neighbors() {
    check_golden(
        MeasurementReport {
            timestamp_ms: 0,
            collector_pci: 1,
            collector_earfcn: 100,
            meas_id: 4,
            pcell: SignalMeasurement::eutra(41, 33),
            neighbors: vec![],
        },
        "000000000000000000800c835308",
    );
}

#[test]
fn golden_single_eutra_neighbor() {
    check_golden(
        MeasurementReport {
            timestamp_ms: 0,
            collector_pci: 1,
            collector_earfcn: 100,
            meas_id: 4,
            pcell: SignalMeasurement::eutra(41, 33),
            neighbors: vec![eutra_neighbor(204, 100, Some(41), Some(2))],
        },
        "000000000000000000800c83530c0ccd4840",
    );
}

#[test]
fn golden_two_eutra_neighbors() {
    check_golden(
        MeasurementReport {
            timestamp_ms: 1000,
            collector_pci: 7,
            collector_earfcn: 100,
            meas_id: 4,
            pcell: SignalMeasurement::eutra(41, 33),
            neighbors: vec![
                eutra_neighbor(204, 100, Some(41), Some(2)),
                eutra_neighbor(366, 100, Some(41), Some(5)),
            ],
        },
        "00000000000003e803800c83530c2ccd4856ed48a0",
    );
}

#[test]
fn golden_gera_neighbor_with_cgi() {
    check_golden(
        MeasurementReport {
            timestamp_ms: 5000,
            collector_pci: 7,
            collector_earfcn: 100,
            meas_id: 3,
            pcell: SignalMeasurement::eutra(44, 31),
            neighbors: vec![NeighborResult {
                identity: CellIdentity::Gera {
                    arfcn: 12,
                    band: BandIndicator::Dcs1800,
                    ncc: 7,
                    bcc: 3,
                    cgi: Some(Cgi::new(Plmn::new(111, 11, false), 1, 111)),
                },
                signal: SignalMeasurement::gera(63),
            }],
        },
        "000000000000138803800c8258fd0063b888844000401bff",
    );
}

#[test]
fn golden_boundary_values_pcs1900() {
    check_golden(
        MeasurementReport {
            timestamp_ms: u64::MAX,
            collector_pci: 503,
            collector_earfcn: 262_143,
            meas_id: 32,
            pcell: SignalMeasurement::eutra(97, 34),
            neighbors: vec![NeighborResult {
                identity: CellIdentity::Gera {
                    arfcn: 1023,
                    band: BandIndicator::Pcs1900,
                    ncc: 0,
                    bcc: 0,
                    cgi: None,
                },
                signal: SignalMeasurement::gera(0),
            }],
        },
        "fffffffffffffffffbffffffc3151ffc0000",
    );
}

#[test]
fn golden_optional_signal_absence() {
    check_golden(
        MeasurementReport {
            timestamp_ms: 42,
            collector_pci: 0,
            collector_earfcn: 0,
            meas_id: 1,
            pcell: SignalMeasurement::eutra(0, 0),
            neighbors: vec![
                eutra_neighbor(0, 0, Some(97), None),
                eutra_neighbor(503, 0, None, None),
            ],
        },
        "000000000000002a000000000004200b0fdc",
    );
}

#[test]
fn golden_gera_three_digit_mnc() {
    check_golden(
        MeasurementReport {
            timestamp_ms: 123_456_789,
            collector_pci: 366,
            collector_earfcn: 3350,
            meas_id: 17,
            pcell: SignalMeasurement::eutra(60, 20),
            neighbors: vec![NeighborResult {
                identity: CellIdentity::Gera {
                    arfcn: 514,
                    band: BandIndicator::Pcs1900,
                    ncc: 2,
                    bcc: 5,
                    cgi: Some(Cgi::new(Plmn::new(310, 410, true), 65_535, 65_535)),
                },
                signal: SignalMeasurement::gera(30),
            }],
        },
        "00000000075bcd15b701a2d078a5101559885043fffffffde0",
    );
}
