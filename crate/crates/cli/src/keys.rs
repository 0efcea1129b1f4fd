//! Single-key input from standard input for live mode.
//!
//! On a terminal, canonical mode, echo and signal generation are switched off
//! so space arrives without Enter and Ctrl-C arrives as a byte. The previous
//! settings come back when the reader thread ends or the process exits
//! normally.

use std::io::{self, Read};
use std::os::fd::AsRawFd;
use std::sync::Mutex;
use std::thread;

use crossbeam_channel::{unbounded, Receiver};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Key {
    Go,
    Quit,
}

/// Maps one input byte to a key.
pub fn key_for(byte: u8) -> Option<Key> {
    match byte {
        b' ' => Some(Key::Go),
        b'q' | b'Q' | 0x03 | 0x04 => Some(Key::Quit),
        _ => None,
    }
}

static SAVED: Mutex<Option<libc::termios>> = Mutex::new(None);

fn enter_raw(fd: i32) -> bool {
    // SAFETY: isatty/tcgetattr/tcsetattr only read and write the struct we
    // pass, and `fd` is standard input.
    unsafe {
        if libc::isatty(fd) != 1 {
            return false;
        }
        let mut t: libc::termios = std::mem::zeroed();
        if libc::tcgetattr(fd, &mut t) != 0 {
            return false;
        }
        *SAVED.lock().unwrap_or_else(|e| e.into_inner()) = Some(t);
        let mut raw = t;
        raw.c_lflag &= !(libc::ICANON | libc::ECHO | libc::ISIG);
        raw.c_cc[libc::VMIN] = 1;
        raw.c_cc[libc::VTIME] = 0;
        libc::tcsetattr(fd, libc::TCSANOW, &raw) == 0
    }
}

/// Puts the terminal back as it was. Safe to call more than once.
pub fn restore() {
    if let Some(t) = SAVED.lock().unwrap_or_else(|e| e.into_inner()).take() {
        // SAFETY: restores settings previously read from the same fd.
        unsafe {
            libc::tcsetattr(io::stdin().as_raw_fd(), libc::TCSANOW, &t);
        }
    }
}

/// Starts a thread reading standard input. When input ends the channel
/// simply goes quiet; the show keeps running until stopped another way.
pub fn spawn() -> Receiver<Key> {
    let (tx, rx) = unbounded();
    let raw = enter_raw(io::stdin().as_raw_fd());
    if raw {
        log::debug!("terminal in single-key mode");
    }
    thread::Builder::new()
        .name("keys".into())
        .spawn(move || {
            let mut stdin = io::stdin().lock();
            let mut buf = [0u8; 64];
            'read: loop {
                let n = match stdin.read(&mut buf) {
                    Ok(0) | Err(_) => break,
                    Ok(n) => n,
                };
                for &b in &buf[..n] {
                    let Some(k) = key_for(b) else { continue };
                    // Ctrl-D on a non-terminal is just data.
                    if b == 0x04 && !raw {
                        continue;
                    }
                    if tx.send(k).is_err() || k == Key::Quit {
                        break 'read;
                    }
                }
            }
            restore();
        })
        .expect("spawn key reader");
    rx
}
