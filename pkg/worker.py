import logging
import os
import threading
import time
import traceback
from typing import Callable, Optional

import check_queue

# ===========================
# 🔧 Configuration
# ===========================
THREADS_ENV = "RISKTREE_THREADS"

logger = logging.getLogger("Worker")


def thread_cap(requested: Optional[int] = None) -> int:
    """Worker count: the request (default: CPU count), capped by RISKTREE_THREADS."""
    count = requested or os.cpu_count() or 1
    env = os.environ.get(THREADS_ENV, "").strip()
    if env:
        try:
            count = min(count, max(1, int(env)))
        except ValueError:
            logger.warning(f"⚠️ Ignoring {THREADS_ENV}={env!r}: not an integer")
    return max(1, count)


# ===========================
# 👷 Worker Loop
# ===========================

def process_check(row: dict, runner: Callable[[str], dict], db_path: str):
    check_id = row["check_id"]
    logger.info(f"⚙️ Running {check_id}")
    start = time.perf_counter()
    try:
        result = runner(check_id)
        elapsed = time.perf_counter() - start
        check_queue.complete_check(row["id"], result, elapsed, db_path)
        logger.info(f"✅ {check_id}: {result['status']} in {elapsed:.2f}s")
    except Exception:
        elapsed = time.perf_counter() - start
        check_queue.fail_check(row["id"], traceback.format_exc(), elapsed, db_path)


def worker_loop(name: str, db_path: str, runner: Callable[[str], dict]):
    """Claims checks until the queue is drained."""
    handled = 0
    while True:
        row = check_queue.get_next_check(name, db_path)
        if row is None:
            break
        process_check(row, runner, db_path)
        handled += 1
    logger.debug(f"👷 {name} finished after {handled} checks")


def run_workers(db_path: str, runner: Callable[[str], dict], threads: Optional[int] = None):
    count = min(thread_cap(threads), max(1, check_queue.pending_count(db_path)))
    if count == 1:
        worker_loop("worker-1", db_path, runner)
        return
    pool = [threading.Thread(target=worker_loop, args=(f"worker-{k + 1}", db_path, runner), daemon=True)
            for k in range(count)]
    logger.info(f"👷 Starting {count} workers")
    for thread in pool:
        thread.start()
    for thread in pool:
        thread.join()
