from gcnnvc.cli import main

main()
