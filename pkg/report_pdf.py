import logging
import textwrap
from typing import Dict, Optional

from reportlab.lib.pagesizes import A4
from reportlab.pdfgen import canvas

import check_queue

# ===========================
# 🔧 Configuration
# ===========================
MARGIN = 50
LINE_HEIGHT = 13
WRAP = 95
STATUS_COLORS = {
    "pass": (0.1, 0.5, 0.2),
    "fail": (0.75, 0.1, 0.1),
    "sampled": (0.7, 0.45, 0.0),
    "skipped": (0.4, 0.4, 0.4),
}

logger = logging.getLogger("ReportPDF")


class _Page:
    """Top-down line writer that starts a new page when the current one is full."""

    def __init__(self, c: canvas.Canvas):
        self.c = c
        self.width, self.height = A4
        self.y = self.height - MARGIN

    def line(self, text: str, font: str = "Helvetica", size: int = 9, color=(0, 0, 0), indent: int = 0):
        if self.y < MARGIN:
            self.c.showPage()
            self.y = self.height - MARGIN
        self.c.setFont(font, size)
        self.c.setFillColorRGB(*color)
        self.c.drawString(MARGIN + indent, self.y, text)
        self.y -= LINE_HEIGHT

    def wrapped(self, text: str, indent: int = 12, **kwargs):
        for chunk in textwrap.wrap(text, WRAP) or [""]:
            self.line(chunk, indent=indent, **kwargs)


def write_pdf(report: dict, path: str, timings: Optional[Dict[str, float]] = None) -> bool:
    """Human-readable report; statuses mirror the JSON rendering."""
    timings = timings or {}
    try:
        c = canvas.Canvas(path, pagesize=A4)
        c.setTitle(f"Risk tree report: {report['model']}")
        page = _Page(c)
        page.line(f"Risk tree report: {report['model']}", font="Helvetica-Bold", size=14)
        page.line(f"suite={report['suite']}  seed={report['seed']}  mode={report['mode']}  "
                  f"tolerance={report['tolerance']}")
        space = report["space"]
        page.line(f"states={space['states']}  T={space['horizon']}  d={space['d']}  m={space['m']}")
        page.y -= LINE_HEIGHT

        for check in report["checks"]:
            took = timings.get(check["id"])
            clock = f"  ({took:.2f}s)" if took is not None else ""
            page.line(f"{check['id']}: {check['status'].upper()}{clock}", font="Helvetica-Bold", size=10,
                      color=STATUS_COLORS[check["status"]])
            page.wrapped(check["anchor"], color=(0.2, 0.2, 0.2))
            details = check["details"]
            for key in ("reason", "error"):
                if key in details:
                    page.wrapped(f"{key}: {details[key]}")
            if check["status"] == "fail" and "witness" in details:
                page.wrapped("witness: " + check_queue.dumps(details["witness"], sort_keys=True)[:600])
            page.y -= LINE_HEIGHT / 2

        summary = report["summary"]
        page.y -= LINE_HEIGHT
        page.line("Summary: " + ", ".join(f"{summary[s]} {s}" for s in ("pass", "fail", "sampled", "skipped")),
                  font="Helvetica-Bold", size=10)
        page.wrapped(f"Scope: {report['scope']}", indent=0)
        c.save()
        logger.info(f"📄 PDF report written to {path}")
        return True
    except Exception as e:
        logger.error(f"❌ Failed to write PDF report {path}: {e}")
        return False
