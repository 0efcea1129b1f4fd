//! The live runtime: a fixed-rate tick loop plus network threads around it.
//!
//! The tick loop owns the [`Show`]. Everything else talks to it through a
//! command queue and receives serialized frames and state through bounded
//! per-client queues that drop messages instead of waiting, so no client can
//! stall the loop.

use std::collections::HashMap;
use std::io::{self, Read, Write};
use std::net::{IpAddr, SocketAddr, TcpListener, TcpStream, ToSocketAddrs, UdpSocket};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use crossbeam_channel::{bounded, unbounded, Receiver, Sender, TrySendError};
use serde_json::Value;
use shadowstage_core::engine::{Show, StreamMode, TriggerCommand};
use thiserror::Error;
use tungstenite::{Message, WebSocket};

use crate::control::{error_reply, frame_json, hello_json, outcome_reply, parse_request, state_json};
use crate::osc::{decode_osc, encode_osc, frame_to_messages, OscArg, OscMessage};

/// Per-client backlog of frames and states before new ones are dropped.
const FEED_DEPTH: usize = 64;
const POLL: Duration = Duration::from_millis(5);
const MAX_LINE: usize = 64 * 1024;

#[derive(Debug, Clone)]
pub struct LiveOptions {
    /// Interface the control and trigger listeners bind to.
    pub bind: IpAddr,
    /// `host:port` to stream frames to.
    pub send_osc: Option<String>,
    pub listen_osc: Option<u16>,
    pub control_port: Option<u16>,
    pub stream: StreamMode,
}

impl Default for LiveOptions {
    fn default() -> Self {
        LiveOptions {
            bind: IpAddr::from([0, 0, 0, 0]),
            send_osc: None,
            listen_osc: None,
            control_port: None,
            stream: StreamMode::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum LiveError {
    #[error("cannot bind {what} on {addr}: {source}")]
    Bind { what: &'static str, addr: String, source: io::Error },
    #[error("cannot resolve OSC target `{0}`")]
    Resolve(String),
    #[error("tick loop panicked")]
    Panicked,
}

struct Submission {
    command: TriggerCommand,
    reply: Option<(Sender<String>, Option<Value>)>,
}

struct Client {
    feed: Sender<Arc<str>>,
    dropped: u64,
}

/// Fan-out of frames and states to connected clients.
#[derive(Default)]
struct Hub {
    clients: Mutex<Vec<Client>>,
    last_state: Mutex<Option<Arc<str>>>,
}

impl Hub {
    fn broadcast(&self, msg: Arc<str>) {
        let mut clients = self.clients.lock().unwrap();
        clients.retain_mut(|c| match c.feed.try_send(msg.clone()) {
            Ok(()) => true,
            Err(TrySendError::Full(_)) => {
                c.dropped += 1;
                if c.dropped.is_power_of_two() {
                    log::warn!("slow control client: {} messages dropped", c.dropped);
                }
                true
            }
            Err(TrySendError::Disconnected(_)) => false,
        });
    }

    fn set_state(&self, state: Arc<str>) {
        *self.last_state.lock().unwrap() = Some(state.clone());
        self.broadcast(state);
    }
}

pub struct LiveHandle {
    control_addr: Option<SocketAddr>,
    trigger_addr: Option<SocketAddr>,
    submit: Sender<Submission>,
    stop: Arc<AtomicBool>,
    tick_thread: JoinHandle<Show>,
    servers: Vec<JoinHandle<()>>,
}

impl LiveHandle {
    pub fn control_addr(&self) -> Option<SocketAddr> {
        self.control_addr
    }

    pub fn trigger_addr(&self) -> Option<SocketAddr> {
        self.trigger_addr
    }

    /// Queues a command for the next tick. The outcome is logged.
    pub fn submit(&self, command: TriggerCommand) {
        let _ = self.submit.send(Submission { command, reply: None });
    }

    /// Queues a command and returns a receiver for its `ok`/`err` reply line.
    pub fn request(&self, command: TriggerCommand) -> Receiver<String> {
        let (tx, rx) = unbounded();
        let _ = self.submit.send(Submission { command, reply: Some((tx, None)) });
        rx
    }

    pub fn is_running(&self) -> bool {
        !self.tick_thread.is_finished()
    }

    /// Stops every thread and hands the show back.
    pub fn stop(self) -> Result<Show, LiveError> {
        self.stop.store(true, Ordering::SeqCst);
        for s in self.servers {
            let _ = s.join();
        }
        self.tick_thread.join().map_err(|_| LiveError::Panicked)
    }
}

/// Binds every configured socket, then starts the tick loop at the show's
/// tick rate.
pub fn start(show: Show, opts: &LiveOptions) -> Result<LiveHandle, LiveError> {
    let stop = Arc::new(AtomicBool::new(false));
    let hub = Arc::new(Hub::default());
    let (submit, queue) = unbounded::<Submission>();
    let mut servers = Vec::new();

    let osc_out = match &opts.send_osc {
        Some(target) => {
            let addr = target
                .to_socket_addrs()
                .ok()
                .and_then(|mut a| a.next())
                .ok_or_else(|| LiveError::Resolve(target.clone()))?;
            let local: SocketAddr = if addr.is_ipv4() { ([0, 0, 0, 0], 0).into() } else { ([0u16; 8], 0).into() };
            let sock = UdpSocket::bind(local)
                .map_err(|source| LiveError::Bind { what: "OSC sender", addr: local.to_string(), source })?;
            Some((sock, addr))
        }
        None => None,
    };

    let mut trigger_addr = None;
    if let Some(port) = opts.listen_osc {
        let addr = SocketAddr::new(opts.bind, port);
        let sock = UdpSocket::bind(addr)
            .map_err(|source| LiveError::Bind { what: "OSC trigger listener", addr: addr.to_string(), source })?;
        sock.set_read_timeout(Some(Duration::from_millis(50))).ok();
        trigger_addr = sock.local_addr().ok();
        let (submit, stop) = (submit.clone(), stop.clone());
        servers.push(thread::spawn(move || trigger_listener(sock, submit, stop)));
    }

    let mut control_addr = None;
    if let Some(port) = opts.control_port {
        let addr = SocketAddr::new(opts.bind, port);
        let listener = TcpListener::bind(addr)
            .map_err(|source| LiveError::Bind { what: "control port", addr: addr.to_string(), source })?;
        listener.set_nonblocking(true).ok();
        control_addr = listener.local_addr().ok();
        let hello: Arc<str> = hello_json(&show).into();
        let (submit, stop, hub) = (submit.clone(), stop.clone(), hub.clone());
        servers.push(thread::spawn(move || control_server(listener, hello, hub, submit, stop)));
    }

    if let Some(a) = control_addr {
        log::info!("control channel on {a}");
    }
    if let Some(a) = trigger_addr {
        log::info!("OSC triggers on udp {a}");
    }

    let stream = opts.stream;
    let tick_stop = stop.clone();
    let tick_thread = thread::spawn(move || tick_loop(show, queue, hub, osc_out, stream, tick_stop));
    Ok(LiveHandle { control_addr, trigger_addr, submit, stop, tick_thread, servers })
}

fn tick_loop(
    mut show: Show,
    queue: Receiver<Submission>,
    hub: Arc<Hub>,
    osc_out: Option<(UdpSocket, SocketAddr)>,
    stream: StreamMode,
    stop: Arc<AtomicBool>,
) -> Show {
    let period = Duration::from_secs_f64(1.0 / show.tick_rate() as f64);
    let mut pending: HashMap<u64, (Sender<String>, Option<Value>)> = HashMap::new();
    let mut last_state = String::new();
    let mut deadline = Instant::now();
    let mut send_errors = 0u64;
    while !stop.load(Ordering::SeqCst) {
        for sub in queue.try_iter() {
            let id = show.enqueue(sub.command);
            if let Some(reply) = sub.reply {
                pending.insert(id, reply);
            }
        }
        match show.step() {
            Ok(tick) => {
                for o in &tick.outcomes {
                    match &o.result {
                        Ok(()) => log::info!("tick {}: {} ok", o.tick, o.command),
                        Err(e) => log::warn!("tick {}: {} refused: {e}", o.tick, o.command),
                    }
                    if let Some((tx, id)) = pending.remove(&o.id) {
                        let _ = tx.send(outcome_reply(o, id.as_ref()));
                    }
                }
                if let Some(frame) = &tick.frame {
                    if let Some((sock, addr)) = &osc_out {
                        for m in frame_to_messages(frame, stream) {
                            let bytes = encode_osc(&m).expect("frame addresses start with '/'");
                            if let Err(e) = sock.send_to(&bytes, addr) {
                                send_errors += 1;
                                if send_errors.is_power_of_two() {
                                    log::warn!("OSC send to {addr} failed ({send_errors} so far): {e}");
                                }
                            }
                        }
                    }
                    hub.broadcast(frame_json(frame).into());
                }
            }
            Err(e) => log::error!("tick {}: {e}", show.clock()),
        }
        let state = state_json(&show.state(), show.sheet());
        if state != last_state {
            hub.set_state(state.as_str().into());
            last_state = state;
        }

        deadline += period;
        let now = Instant::now();
        if deadline > now {
            thread::sleep(deadline - now);
        } else if now - deadline > period * 4 {
            log::warn!("tick loop fell {:?} behind; resynchronizing", now - deadline);
            deadline = now;
        }
    }
    show
}

fn trigger_command(msg: &OscMessage) -> Option<TriggerCommand> {
    match (msg.address.as_str(), msg.args.as_slice()) {
        ("/cue/go", []) => Some(TriggerCommand::Go),
        ("/cue/goto", [OscArg::Int(row)]) if *row >= 0 => Some(TriggerCommand::Goto(*row as usize)),
        _ => None,
    }
}

fn trigger_listener(sock: UdpSocket, submit: Sender<Submission>, stop: Arc<AtomicBool>) {
    let mut buf = vec![0u8; 65536];
    while !stop.load(Ordering::SeqCst) {
        let (n, from) = match sock.recv_from(&mut buf) {
            Ok(r) => r,
            Err(e) if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) => continue,
            Err(e) => {
                log::warn!("OSC trigger socket: {e}");
                continue;
            }
        };
        match decode_osc(&buf[..n]) {
            Ok(msg) => match trigger_command(&msg) {
                Some(command) => {
                    log::debug!("OSC trigger from {from}: {msg}");
                    let _ = submit.send(Submission { command, reply: None });
                }
                None => log::warn!("ignoring OSC message from {from}: {msg}"),
            },
            Err(e) => log::warn!("bad OSC datagram from {from}: {e}"),
        }
    }
}

fn control_server(
    listener: TcpListener,
    hello: Arc<str>,
    hub: Arc<Hub>,
    submit: Sender<Submission>,
    stop: Arc<AtomicBool>,
) {
    while !stop.load(Ordering::SeqCst) {
        match listener.accept() {
            Ok((stream, peer)) => {
                log::info!("control client {peer} connected");
                let (hello, hub, submit, stop) = (hello.clone(), hub.clone(), submit.clone(), stop.clone());
                thread::spawn(move || {
                    if let Err(e) = serve_client(stream, hello, &hub, submit, stop) {
                        log::debug!("control client {peer}: {e}");
                    }
                    log::info!("control client {peer} disconnected");
                });
            }
            Err(e) if e.kind() == io::ErrorKind::WouldBlock => thread::sleep(Duration::from_millis(20)),
            Err(e) => {
                log::warn!("control accept: {e}");
                thread::sleep(Duration::from_millis(20));
            }
        }
    }
}

/// A message transport for one client: raw JSON lines or web-socket text
/// messages. Reads return quickly when nothing is pending.
trait Transport {
    fn poll(&mut self, lines: &mut Vec<String>) -> io::Result<bool>;
    fn send(&mut self, msg: &str) -> io::Result<()>;
}

struct Lines {
    stream: TcpStream,
    buf: Vec<u8>,
}

impl Transport for Lines {
    fn poll(&mut self, lines: &mut Vec<String>) -> io::Result<bool> {
        let mut chunk = [0u8; 4096];
        match self.stream.read(&mut chunk) {
            Ok(0) => return Ok(false),
            Ok(n) => self.buf.extend_from_slice(&chunk[..n]),
            Err(e) if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) => {}
            Err(e) => return Err(e),
        }
        while let Some(nl) = self.buf.iter().position(|&b| b == b'\n') {
            let line: Vec<u8> = self.buf.drain(..=nl).collect();
            lines.push(String::from_utf8_lossy(&line).trim().to_string());
        }
        if self.buf.len() > MAX_LINE {
            self.buf.clear();
            lines.push(String::new());
        }
        Ok(true)
    }

    fn send(&mut self, msg: &str) -> io::Result<()> {
        self.stream.write_all(msg.as_bytes())?;
        self.stream.write_all(b"\n")
    }
}

struct Ws(WebSocket<TcpStream>);

fn ws_io(e: tungstenite::Error) -> io::Error {
    match e {
        tungstenite::Error::Io(e) => e,
        other => io::Error::other(other),
    }
}

impl Transport for Ws {
    fn poll(&mut self, lines: &mut Vec<String>) -> io::Result<bool> {
        match self.0.read() {
            Ok(Message::Text(t)) => lines.extend(t.lines().map(|l| l.trim().to_string())),
            Ok(Message::Close(_)) => return Ok(false),
            Ok(_) => {}
            Err(tungstenite::Error::ConnectionClosed | tungstenite::Error::AlreadyClosed) => return Ok(false),
            Err(tungstenite::Error::Io(e))
                if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) => {}
            Err(e) => return Err(ws_io(e)),
        }
        Ok(true)
    }

    fn send(&mut self, msg: &str) -> io::Result<()> {
        self.0.send(Message::text(msg)).map_err(ws_io)
    }
}

fn serve_client(
    stream: TcpStream,
    hello: Arc<str>,
    hub: &Hub,
    submit: Sender<Submission>,
    stop: Arc<AtomicBool>,
) -> io::Result<()> {
    stream.set_nodelay(true).ok();
    // Browsers open with an HTTP upgrade request; raw clients may stay
    // silent, so give up waiting after a moment and assume raw lines.
    stream.set_read_timeout(Some(Duration::from_millis(200)))?;
    let mut head = [0u8; 4];
    let is_ws = matches!(stream.peek(&mut head), Ok(4) if &head == b"GET ");
    let mut transport: Box<dyn Transport> = if is_ws {
        stream.set_read_timeout(None)?;
        let ws = tungstenite::accept(stream.try_clone()?).map_err(|e| io::Error::other(e.to_string()))?;
        stream.set_read_timeout(Some(POLL))?;
        Box::new(Ws(ws))
    } else {
        stream.set_read_timeout(Some(POLL))?;
        Box::new(Lines { stream, buf: Vec::new() })
    };

    let (ack_tx, acks) = unbounded::<String>();
    let (feed_tx, feed) = bounded::<Arc<str>>(FEED_DEPTH);
    transport.send(&hello)?;
    {
        let mut clients = hub.clients.lock().unwrap();
        if let Some(s) = hub.last_state.lock().unwrap().clone() {
            transport.send(&s)?;
        }
        clients.push(Client { feed: feed_tx, dropped: 0 });
    }

    let mut lines = Vec::new();
    while !stop.load(Ordering::SeqCst) {
        for a in acks.try_iter() {
            transport.send(&a)?;
        }
        for m in feed.try_iter() {
            transport.send(&m)?;
        }
        if !transport.poll(&mut lines)? {
            return Ok(());
        }
        for line in lines.drain(..) {
            if line.is_empty() {
                continue;
            }
            let req = parse_request(&line);
            match req.command {
                Ok(command) => {
                    let _ = submit.send(Submission { command, reply: Some((ack_tx.clone(), req.id)) });
                }
                Err(e) => transport.send(&error_reply(&e, req.id.as_ref()))?,
            }
        }
    }
    Ok(())
}
