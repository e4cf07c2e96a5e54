from surfalg.cli import main

raise SystemExit(main())
