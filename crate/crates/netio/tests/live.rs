use std::io::{BufRead, BufReader, Write};
use std::net::{TcpStream, UdpSocket};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use serde_json::Value;
use shadowstage_core::engine::{build_show, ShowConfig, StreamMode, TriggerCommand};
use shadowstage_net::{decode_osc, encode_osc, start, LiveHandle, LiveOptions, OscArg, OscMessage};

fn fixture_show() -> shadowstage_core::engine::Show {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/show.toml");
    let mut config = ShowConfig::load(&path).unwrap();
    config.emit_points = true;
    build_show(&config).unwrap()
}

fn launch(send_osc: Option<String>) -> LiveHandle {
    let opts = LiveOptions {
        bind: [127, 0, 0, 1].into(),
        send_osc,
        listen_osc: Some(0),
        control_port: Some(0),
        stream: StreamMode::Both,
    };
    start(fixture_show(), &opts).unwrap()
}

struct LineClient {
    reader: BufReader<TcpStream>,
    writer: TcpStream,
}

impl LineClient {
    fn connect(h: &LiveHandle) -> Self {
        let s = TcpStream::connect(h.control_addr().unwrap()).unwrap();
        s.set_read_timeout(Some(Duration::from_secs(5))).unwrap();
        LineClient { writer: s.try_clone().unwrap(), reader: BufReader::new(s) }
    }

    fn send(&mut self, line: &str) {
        self.writer.write_all(format!("{line}\n").as_bytes()).unwrap();
    }

    /// Next message for which `pred` holds, skipping others.
    fn until(&mut self, pred: impl Fn(&Value) -> bool) -> Value {
        let deadline = Instant::now() + Duration::from_secs(5);
        let mut line = String::new();
        while Instant::now() < deadline {
            line.clear();
            self.reader.read_line(&mut line).unwrap();
            let v: Value = serde_json::from_str(&line).unwrap();
            if pred(&v) {
                return v;
            }
        }
        panic!("no matching message");
    }
}

fn is(t: &'static str) -> impl Fn(&Value) -> bool {
    move |v| v["type"] == t
}

#[test]
fn raw_lines_client() {
    let h = launch(None);
    let mut c = LineClient::connect(&h);
    let hello = c.until(is("hello"));
    assert_eq!(hello["tick_rate"], 60);
    assert_eq!(hello["rows"].as_array().unwrap().len(), 46);
    let chars = hello["characters"].as_array().unwrap();
    assert_eq!(chars.len(), 5);
    assert_eq!(chars[0]["parents"][0], Value::Null);
    assert_eq!(chars[0]["joints"].as_array().unwrap().len(), chars[0]["parents"].as_array().unwrap().len());

    let state = c.until(is("state"));
    assert_eq!(state["next_row"], 1);
    assert_eq!(state["row_labels"].as_array().unwrap().len(), 46);

    c.send(r#"{"cmd":"go","id":1}"#);
    let ok = c.until(|v| v["id"] == 1);
    assert_eq!(ok["type"], "ok");
    assert_eq!(ok["cmd"], "go");
    c.until(|v| v["type"] == "state" && v["next_row"] == 2);

    c.send(r#"{"cmd":"goto","row":0,"id":2}"#);
    let err = c.until(|v| v["id"] == 2);
    assert_eq!((err["type"].as_str(), err["code"].as_str()), (Some("err"), Some("engine")));
    assert!(err["message"].as_str().unwrap().contains("out of range"));

    c.send(r#"{"cmd":"go""#);
    let bad = c.until(is("err"));
    assert_eq!(bad["code"], "malformed_json");

    let frame = c.until(is("frame"));
    assert_eq!(frame["characters"].as_array().unwrap().len(), 5);
    assert!(frame["characters"][0]["points"].is_array());

    let show = h.stop().unwrap();
    assert_eq!(show.next_row(), 2);
}

#[test]
fn websocket_client() {
    let h = launch(None);
    let url = format!("ws://{}/", h.control_addr().unwrap());
    let (mut ws, _) = tungstenite::connect(url).unwrap();
    let next = |ws: &mut tungstenite::WebSocket<_>| -> Value {
        let m = ws.read().unwrap();
        serde_json::from_str(m.to_text().unwrap()).unwrap()
    };
    assert_eq!(next(&mut ws)["type"], "hello");
    ws.send(tungstenite::Message::text(r#"{"cmd":"pause","id":"p"}"#)).unwrap();
    loop {
        let v = next(&mut ws);
        if v["id"] == "p" {
            assert_eq!(v["type"], "ok");
            break;
        }
    }
    loop {
        let v = next(&mut ws);
        if v["type"] == "state" && v["paused"] == true {
            break;
        }
    }
    ws.close(None).ok();
    assert!(h.stop().unwrap().is_paused());
}

#[test]
fn osc_triggers_and_stream() {
    let sink = UdpSocket::bind("127.0.0.1:0").unwrap();
    sink.set_read_timeout(Some(Duration::from_secs(5))).unwrap();
    let h = launch(Some(sink.local_addr().unwrap().to_string()));

    let sender = UdpSocket::bind("127.0.0.1:0").unwrap();
    let go = encode_osc(&OscMessage::new("/cue/go", vec![])).unwrap();
    sender.send_to(&go, h.trigger_addr().unwrap()).unwrap();
    let goto = encode_osc(&OscMessage::new("/cue/goto", vec![OscArg::Int(10)])).unwrap();
    sender.send_to(&goto, h.trigger_addr().unwrap()).unwrap();
    sender.send_to(b"garbage!", h.trigger_addr().unwrap()).unwrap();

    let mut buf = vec![0u8; 65536];
    let mut ticks = Vec::new();
    let mut saw_points = false;
    while ticks.len() < 10 {
        let n = sink.recv(&mut buf).unwrap();
        let m = decode_osc(&buf[..n]).unwrap();
        if m.address == "/avatar/Scholar/pose" {
            let OscArg::Int(t) = m.args[0] else { panic!("{m}") };
            ticks.push(t);
        }
        saw_points |= m.address.ends_with("/points");
    }
    assert!(saw_points);
    assert!(ticks.windows(2).all(|w| w[0] < w[1]), "{ticks:?}");

    let reply = h.request(TriggerCommand::Goto(46));
    assert!(reply.recv_timeout(Duration::from_secs(5)).unwrap().contains("\"ok\""));
    let show = h.stop().unwrap();
    assert!(show.state().fired.contains(&1));
    assert_eq!(show.next_row(), 46);
}

/// A client that never reads must not hold the tick loop back.
#[test]
fn silent_client_does_not_stall_ticks() {
    let h = launch(None);
    let _silent = TcpStream::connect(h.control_addr().unwrap()).unwrap();
    let started = Instant::now();
    std::thread::sleep(Duration::from_millis(1500));
    let show = h.stop().unwrap();
    let expected = started.elapsed().as_secs_f64() * 60.0;
    assert!(show.clock() as f64 > expected * 0.8, "clock {} after {expected} ticks' time", show.clock());
}
