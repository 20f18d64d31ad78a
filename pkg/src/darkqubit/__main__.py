import sys

from darkqubit.cli import main

sys.exit(main())
