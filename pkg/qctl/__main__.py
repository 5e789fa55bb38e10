from qctl.cli import main

raise SystemExit(main())
