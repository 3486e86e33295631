"""Request loop: watch a directory, answer one request at a time.

Every request that carries a READY sentinel is terminated with exactly one
of DONE or ERROR; directories already bearing a verdict are never touched
again, so restarting the server over an old watch directory is safe.
"""

from __future__ import annotations

import threading
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from .backbones import resolve_backbone
from .protocol import ProtocolError, load_request, write_error, write_reply


class BridgeServer:
    def __init__(self, watch_dir, backbone: str = "auto",
                 poll_interval: float = 0.05):
        self.watch_dir = Path(watch_dir)
        self.watch_dir.mkdir(parents=True, exist_ok=True)
        self.backbone = resolve_backbone(backbone)
        self.poll_interval = poll_interval
        self.handled = 0

    def _pending(self) -> list[Path]:
        dirs = [p.parent for p in self.watch_dir.glob("*/READY")]
        return sorted(d for d in dirs
                      if not (d / "DONE").exists()
                      and not (d / "ERROR").exists())

    def handle(self, req_dir: Path) -> bool:
        """Answer one request; returns True on DONE, False on ERROR."""
        try:
            req = load_request(req_dir)
            out = np.asarray(self.backbone.predict(req), dtype=np.float64)
            expected_cols = req.n_classes if req.is_classification else 1
            if out.shape != (req.test_x.shape[0], expected_cols):
                raise ProtocolError(f"backbone returned shape {out.shape}, "
                                    f"expected ({req.test_x.shape[0]}, "
                                    f"{expected_cols})")
            if not np.all(np.isfinite(out)):
                raise ProtocolError("backbone returned non-finite values")
            write_reply(req_dir, out)
            return True
        except ProtocolError as exc:
            write_error(req_dir, str(exc))
        except Exception as exc:  # a bad request must not kill the server
            write_error(req_dir, f"internal failure: {exc}")
        return False

    def scan_once(self) -> int:
        pending = self._pending()
        for req_dir in pending:
            self.handle(req_dir)
            self.handled += 1
        return len(pending)

    def serve_forever(self, stop: threading.Event | None = None) -> None:
        while stop is None or not stop.is_set():
            if self.scan_once() == 0:
                time.sleep(self.poll_interval)


@contextmanager
def serve_in_thread(watch_dir, backbone: str = "auto",
                    poll_interval: float = 0.01):
    """Run a server on a daemon thread for the scope of a with-block."""
    server = BridgeServer(watch_dir, backbone, poll_interval)
    stop = threading.Event()
    thread = threading.Thread(target=server.serve_forever, args=(stop,),
                              daemon=True)
    thread.start()
    try:
        yield server
    finally:
        stop.set()
        thread.join(timeout=10.0)
