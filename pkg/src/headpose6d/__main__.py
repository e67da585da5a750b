import sys

from headpose6d.cli import main

sys.exit(main())
