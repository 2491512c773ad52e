#!/usr/bin/env python3
"""
Run the bocoa web API.

BOCOA_OUT selects the results directory and BOCOA_PORT the port.
"""

import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from web.app import create_app

if __name__ == "__main__":
    out_dir = os.environ.get("BOCOA_OUT", "results")
    port = int(os.environ.get("BOCOA_PORT", "5001"))
    app = create_app(out_dir=out_dir)
    print(f"🚀 Starting bocoa web API (results in {out_dir})...")
    print(f"🔗 Health check: http://localhost:{port}/api/health")
    print("⏹️  Press Ctrl+C to stop")

    app.run(debug=True, host='0.0.0.0', port=port)
